#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "elf/fields.hpp"
#include "elf/integrator.hpp"
#include "elf/verify.hpp"
#include "test_support.hpp"

using elf::EmdenSpec;
using elf::IntegrationConfig;
using elf::Profile;
using elf::ResidualMethod;
using elf::SystemKind;
using elf_test::make_spec;

namespace {

elf::Trajectory short_run(const EmdenSpec& s, double t_end = 1.0) {
    IntegrationConfig cfg;
    cfg.t_end = t_end;
    return elf::integrate(s, cfg);
}

} // namespace

TEST_CASE("closed-form fields cancel the mass equation to rounding") {
    EmdenSpec s =
        make_spec(SystemKind::A, 2, 1.0, 1.0, {1.0, 1.3}, {0.2, -0.1});
    s.drifts = {0.1, -0.2};
    const Profile p = elf::make_profile(s);
    const elf::Trajectory traj = short_run(s);

    const std::vector<double> x{0.4, -0.7};
    CHECK(elf::mass_residual(s, p, traj, 0.37, x) < 1e-14);
    CHECK(elf::mass_residual(s, p, traj, 0.90, x) < 1e-14);
}

TEST_CASE("reduction-consistent runs have tiny residual reports") {
    // One case per closed-form regime: Gaussian profile with the
    // divergence-coupled system, compact support and boundary-limited
    // profiles with the volume-coupled stress system.
    struct Case {
        SystemKind k;
        double theta, xi;
    };
    for (const Case c : {Case{SystemKind::A, 1.0, 1.0},
                         Case{SystemKind::BProof, 2.0, 1.0},
                         Case{SystemKind::BProof, 0.5, -1.0}}) {
        CAPTURE(static_cast<int>(c.k));
        CAPTURE(c.theta);
        EmdenSpec s =
            make_spec(c.k, 2, c.theta, c.xi, {1.0, 1.3}, {0.15, -0.1});
        s.drifts = {0.1, 0.0};
        const Profile p = elf::make_profile(s);
        const elf::Trajectory traj = short_run(s, 0.5);

        const elf::ResidualReport rep =
            elf::residual_report(s, p, traj, ResidualMethod::Analytic);
        REQUIRE(rep.normalization > 0.0);
        REQUIRE(!rep.sample_points.empty());
        CHECK(rep.mass_residual_max < 1e-12);
        CHECK(rep.worst_momentum() < 1e-12);
    }
}

TEST_CASE("the two stress reductions disagree off the symmetric locus") {
    // Same parameters, unequal axis scales: the volume-coupled form
    // verifies, the per-axis form does not, and they sit well apart.
    auto worst_momentum = [](SystemKind k) {
        EmdenSpec s = make_spec(k, 2, 2.0, 1.0, {1.0, 1.5}, {0.2, -0.1});
        const Profile p = elf::make_profile(s);
        const elf::Trajectory traj = short_run(s);
        return elf::residual_report(s, p, traj, ResidualMethod::Analytic)
            .worst_momentum();
    };
    const double ok = worst_momentum(SystemKind::BProof);
    const double off = worst_momentum(SystemKind::BTheorem);
    CHECK(ok < 1e-6);
    CHECK(off > 1e-6);
    CHECK(off / std::max(ok, 1e-300) >= 1e4);
}

TEST_CASE("the reductions coincide at theta = 1 and for radial data") {
    SUBCASE("theta = 1") {
        for (SystemKind k : {SystemKind::BProof, SystemKind::BTheorem}) {
            EmdenSpec s = make_spec(k, 2, 1.0, 1.0, {1.0, 1.5}, {0.2, -0.1});
            const Profile p = elf::make_profile(s);
            const elf::Trajectory traj = short_run(s);
            CHECK(elf::residual_report(s, p, traj, ResidualMethod::Analytic)
                      .worst_momentum() < 1e-10);
        }
    }
    SUBCASE("radial data") {
        for (SystemKind k : {SystemKind::BProof, SystemKind::BTheorem}) {
            EmdenSpec s =
                make_spec(k, 2, 2.0, 1.0, {1.2, 1.2}, {-0.1, -0.1});
            const Profile p = elf::make_profile(s);
            const elf::Trajectory traj = short_run(s);
            CHECK(elf::residual_report(s, p, traj, ResidualMethod::Analytic)
                      .worst_momentum() < 1e-10);
        }
    }
}

TEST_CASE("finite-difference oracle agrees with the analytic residuals") {
    EmdenSpec s =
        make_spec(SystemKind::A, 2, 1.0, 1.0, {1.0, 1.3}, {0.15, -0.1});
    const Profile p = elf::make_profile(s);
    const elf::Trajectory traj = short_run(s);

    const std::vector<double> x{0.3, -0.2};
    const elf::FdResidual fd = elf::fd_oracle_residual(s, p, traj, 0.5, x, 1e-3);
    CHECK(fd.mass < 1e-7);
    CHECK(fd.momentum[0] < 1e-7);
    CHECK(fd.momentum[1] < 1e-7);

    // The oracle is not trivially zero: corrupting the profile (doubled
    // separation constant) must blow the momentum balance while the mass
    // equation, a pure transport identity, stays satisfied.
    Profile bad = p;
    bad.xi = 2.0 * p.xi;
    const elf::FdResidual broken =
        elf::fd_oracle_residual(s, bad, traj, 0.5, x, 1e-3);
    CHECK(broken.mass < 1e-7);
    CHECK(broken.momentum[0] > 1e4 * std::max(fd.momentum[0], 1e-300));
    CHECK(broken.momentum[0] > 1e-3);
}

TEST_CASE("finite-difference report stays close to the analytic one") {
    EmdenSpec s =
        make_spec(SystemKind::A, 2, 1.0, 1.0, {1.0, 1.3}, {0.15, -0.1});
    const Profile p = elf::make_profile(s);
    const elf::Trajectory traj = short_run(s);

    const elf::ResidualReport rep =
        elf::residual_report(s, p, traj, ResidualMethod::FiniteDifference);
    CHECK(rep.method == ResidualMethod::FiniteDifference);
    CHECK(rep.mass_residual_max < 1e-5);
    CHECK(rep.worst_momentum() < 1e-5);
}

TEST_CASE("samples at the support edge are refused, vacuum is exact") {
    // Stationary compact-support configuration: boundary at s = 1, so a
    // point with s = 1 sits inside the exclusion margin.
    EmdenSpec s = make_spec(SystemKind::BProof, 2, 2.0, 4.0, {1.0, 1.0},
                            {0.0, 0.0});
    const Profile p = elf::make_profile(s);
    REQUIRE(p.boundary_s().has_value());
    REQUIRE(*p.boundary_s() == doctest::Approx(1.0));
    const elf::Trajectory traj = short_run(s, 0.01);

    const std::vector<double> edge{1.0, 0.0};
    CHECK_THROWS_AS(
        elf::momentum_residual(s, p, traj, 0.005, edge),
        elf::SupportBoundaryError);

    // Far outside the support every residual vanishes identically.
    const std::vector<double> vac{2.0, 0.0};
    const auto rv = elf::momentum_residual(s, p, traj, 0.005, vac);
    CHECK(rv[0] == 0.0);
    CHECK(rv[1] == 0.0);
    CHECK(elf::mass_residual(s, p, traj, 0.005, vac) == 0.0);
}

TEST_CASE("report samples respect the declared margins") {
    EmdenSpec s = make_spec(SystemKind::BProof, 2, 2.0, 1.0, {1.0, 1.4},
                            {0.1, -0.05});
    const Profile p = elf::make_profile(s);
    const elf::Trajectory traj = short_run(s);
    REQUIRE(p.boundary_s().has_value());
    const double b = *p.boundary_s();

    elf::VerifyOptions opts;
    opts.support_margin = 1e-2;
    const elf::ResidualReport rep =
        elf::residual_report(s, p, traj, ResidualMethod::Analytic, opts);
    REQUIRE(!rep.sample_points.empty());
    for (const auto& [t, x] : rep.sample_points) {
        const elf::PhaseState st = elf::dense_eval(traj, t);
        double sv = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double X = x[i] + s.drifts[i];
            sv += X * X / (st.a[i] * st.a[i]);
        }
        CHECK(std::abs(sv - b) >= opts.support_margin * 0.999);
    }
}

TEST_CASE("quasi-random driver emits the expected leading terms") {
    // Radical-inverse sequences in bases 2 and 3, offset to skip the origin.
    CHECK(elf::detail::halton(0, 0) == doctest::Approx(0.5));
    CHECK(elf::detail::halton(1, 0) == doctest::Approx(0.25));
    CHECK(elf::detail::halton(2, 0) == doctest::Approx(0.75));
    CHECK(elf::detail::halton(3, 0) == doctest::Approx(0.125));
    CHECK(elf::detail::halton(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(elf::detail::halton(1, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(elf::detail::halton(2, 1) == doctest::Approx(1.0 / 9.0));
    for (int i = 0; i < 200; ++i)
        for (int d = 0; d < 4; ++d) {
            const double v = elf::detail::halton(i, d);
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
}

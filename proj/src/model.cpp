#include "elf/model.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace elf {

const char* to_string(SystemKind k) {
    switch (k) {
    case SystemKind::A: return "A";
    case SystemKind::BProof: return "BProof";
    case SystemKind::BTheorem: return "BTheorem";
    case SystemKind::P: return "P";
    }
    return "?";
}

SystemKind system_from_string(std::string_view s) {
    if (s == "A") return SystemKind::A;
    if (s == "BProof") return SystemKind::BProof;
    if (s == "BTheorem") return SystemKind::BTheorem;
    if (s == "P") return SystemKind::P;
    throw ValidationError("unknown system \"" + std::string(s) +
                          "\" (expected A, BProof, BTheorem, or P)");
}

double EmdenSpec::kappa() const {
    switch (system) {
    case SystemKind::A: return kappa1;
    case SystemKind::BProof:
    case SystemKind::BTheorem: return kappa2;
    case SystemKind::P: return kappa1; // pressure constant K lives here
    }
    return 0.0;
}

void EmdenSpec::validate() const {
    const auto n = static_cast<std::size_t>(dimension);
    if (dimension < 1)
        throw ValidationError("dimension must be >= 1");
    if (drifts.size() != n || a0.size() != n || a1.size() != n)
        throw ValidationError("d, a0, a1 must each have exactly N entries");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a0[i] > 0.0))
            throw ValidationError("a0[" + std::to_string(i) +
                                  "] must be > 0 (a_i0 > 0)");
    }
    if (!std::isfinite(theta) || !std::isfinite(xi) || !std::isfinite(alpha))
        throw ValidationError("theta, xi, alpha must be finite");
    if (theta < 0.0)
        throw ValidationError("theta must be >= 0");
    if (alpha < 0.0)
        throw ValidationError("alpha must be >= 0");
    if (kappa1 < 0.0 || kappa2 < 0.0)
        throw ValidationError("viscosity coefficients must be >= 0");

    if (system == SystemKind::P) {
        if (!(kappa1 > 0.0))
            throw ValidationError(
                "system P stores its pressure constant in kappa1 (> 0)");
        if (kappa2 != 0.0)
            throw ValidationError("system P does not use kappa2; set it to 0");
        if (theta < 1.0)
            throw ValidationError(
                "system P interprets theta as gamma and needs gamma >= 1");
        return;
    }
    // Exactly one viscosity mechanism may be active.
    if (kappa1 > 0.0 && kappa2 > 0.0)
        throw ValidationError(
            "kappa1 and kappa2 are both positive (mixed case unsupported)");
    if (system == SystemKind::A && !(kappa1 > 0.0))
        throw ValidationError("system A requires kappa1 > 0 (and kappa2 = 0)");
    if ((system == SystemKind::BProof || system == SystemKind::BTheorem) &&
        !(kappa2 > 0.0))
        throw ValidationError(
            "systems BProof/BTheorem require kappa2 > 0 (and kappa1 = 0)");
}

PhaseState initial_state(const EmdenSpec& spec) {
    return PhaseState{0.0, spec.a0, spec.a1};
}

PhaseState unpack_state(int dimension, double t, std::span<const double> y) {
    const auto n = static_cast<std::size_t>(dimension);
    PhaseState s;
    s.t = t;
    s.a.assign(y.begin(), y.begin() + n);
    s.adot.assign(y.begin() + n, y.begin() + 2 * n);
    return s;
}

void pack_state(const PhaseState& state, std::span<double> y) {
    const std::size_t n = state.a.size();
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = state.a[i];
        y[n + i] = state.adot[i];
    }
}

bool rhs_flat(const EmdenSpec& spec, std::span<const double> y,
              std::span<double> dydt) noexcept {
    const auto n = static_cast<std::size_t>(spec.dimension);
    for (std::size_t i = 0; i < n; ++i)
        if (!(y[i] > 0.0)) return false;

    for (std::size_t i = 0; i < n; ++i)
        dydt[i] = y[n + i];

    // xi = 0 decouples everything: free linear motion.
    if (spec.xi == 0.0) {
        for (std::size_t i = 0; i < n; ++i) dydt[n + i] = 0.0;
        return true;
    }

    switch (spec.system) {
    case SystemKind::A: {
        double volume = 1.0, divergence = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            volume *= y[i];
            divergence += y[n + i] / y[i];
        }
        const double vpow = std::pow(volume, spec.theta - 1.0);
        for (std::size_t i = 0; i < n; ++i)
            dydt[n + i] = -spec.xi * divergence / (y[i] * vpow);
        break;
    }
    case SystemKind::BProof: {
        double volume = 1.0;
        for (std::size_t i = 0; i < n; ++i) volume *= y[i];
        const double vpow = std::pow(volume, spec.theta - 1.0);
        for (std::size_t i = 0; i < n; ++i)
            dydt[n + i] = -spec.xi * y[n + i] / (y[i] * y[i] * vpow);
        break;
    }
    case SystemKind::BTheorem: {
        const double m = spec.dimension * (spec.theta - 1.0) + 2.0;
        for (std::size_t i = 0; i < n; ++i)
            dydt[n + i] = -spec.xi * y[n + i] / std::pow(y[i], m);
        break;
    }
    case SystemKind::P: {
        double volume = 1.0;
        for (std::size_t i = 0; i < n; ++i) volume *= y[i];
        const double vpow = std::pow(volume, spec.theta - 1.0); // theta = gamma
        for (std::size_t i = 0; i < n; ++i)
            dydt[n + i] = spec.xi / (y[i] * vpow);
        break;
    }
    }
    return true;
}

std::vector<double> rhs(const EmdenSpec& spec, const PhaseState& state) {
    const auto n = static_cast<std::size_t>(spec.dimension);
    std::vector<double> y(2 * n), dydt(2 * n);
    pack_state(state, y);
    if (!rhs_flat(spec, y, dydt))
        throw DomainError("rhs: all axis scales a_i must be > 0");
    return dydt;
}

Eigen::MatrixXd jacobian(const EmdenSpec& spec, const PhaseState& state) {
    constexpr double kRel = 1e-6;
    constexpr double kAbs = 1e-9;
    constexpr int kMaxShrinks = 5;

    const auto n = static_cast<std::size_t>(spec.dimension);
    const std::size_t dim = 2 * n;
    std::vector<double> v(dim), plus(dim), minus(dim), fp(dim), fm(dim);
    pack_state(state, v);
    for (std::size_t i = 0; i < n; ++i)
        if (!(v[i] > 0.0))
            throw DomainError("jacobian: all axis scales a_i must be > 0");

    Eigen::MatrixXd jac(dim, dim);
    for (std::size_t j = 0; j < dim; ++j) {
        double h = kRel * std::abs(v[j]) + kAbs;
        if (j < n) {
            // Keep the perturbed axis scale positive.
            int shrinks = 0;
            while (v[j] - h <= 0.0 && shrinks < kMaxShrinks) {
                h *= 0.5;
                ++shrinks;
            }
            if (v[j] - h <= 0.0)
                throw DomainError(
                    "jacobian: axis scale too close to 0 for a stable "
                    "finite-difference step");
        }
        plus = v;
        minus = v;
        plus[j] += h;
        minus[j] -= h;
        if (!rhs_flat(spec, plus, fp) || !rhs_flat(spec, minus, fm))
            throw DomainError("jacobian: perturbed state left the domain");
        for (std::size_t r = 0; r < dim; ++r)
            jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                (fp[r] - fm[r]) / (2.0 * h);
    }
    return jac;
}

} // namespace elf

#include "elf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace elf {

const char* to_string(ResidualMethod m) {
    return m == ResidualMethod::Analytic ? "analytic" : "finite_difference";
}

double ResidualReport::worst_momentum() const {
    double w = 0.0;
    for (double v : momentum_residual_max) w = std::max(w, v);
    return w;
}

namespace detail {

double halton(unsigned long long index, int dim) {
    static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                     23, 29, 31, 37, 41, 43, 47, 53};
    const double base = primes[dim % 16];
    double inv = 1.0 / base, factor = inv, value = 0.0;
    unsigned long long i = index + 1; // skip the all-zeros point
    while (i > 0) {
        value += factor * static_cast<double>(i % static_cast<unsigned long long>(base));
        i /= static_cast<unsigned long long>(base);
        factor *= inv;
    }
    return value;
}

} // namespace detail

namespace {

PhaseState state_at(const Trajectory& traj, double t) {
    const double terminal = traj.terminal_time();
    const double tol = 1e-12 * std::max(1.0, std::abs(terminal));
    if (t < -tol || t > terminal + tol)
        throw DomainError("residual: sample time off the trajectory span");
    return dense_eval(traj, t);
}

double similarity(const EmdenSpec& spec, const PhaseState& state,
                  std::span<const double> x) {
    double s = 0.0;
    for (int k = 0; k < spec.dimension; ++k) {
        const double xk = x[k] + spec.drifts[k];
        s += xk * xk / (state.a[k] * state.a[k]);
    }
    return s;
}

} // namespace

double mass_residual(const EmdenSpec& spec, const Profile& p,
                     const Trajectory& traj, double t,
                     std::span<const double> x) {
    const PhaseState st = state_at(traj, t);
    const int n = spec.dimension;
    double volume = 1.0, div_rate = 0.0, s = 0.0, s_t = 0.0;
    for (int k = 0; k < n; ++k) {
        const double xk = x[k] + spec.drifts[k];
        const double ak = st.a[k];
        volume *= ak;
        div_rate += st.adot[k] / ak;
        s += xk * xk / (ak * ak);
        s_t += -2.0 * st.adot[k] * xk * xk / (ak * ak * ak);
    }
    const double f = profile_eval(p, s);
    if (!std::isfinite(f))
        throw DomainError("mass_residual: sample beyond the existence boundary");
    const double fp = profile_deriv(p, s);

    const double rho_t = (fp * s_t - f * div_rate) / volume;
    double div_flux = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xi_ = x[i] + spec.drifts[i];
        const double ai = st.a[i];
        const double rate = st.adot[i] / ai;
        // d(rho)/dx_i * u_i + rho * du_i/dx_i
        div_flux += fp * (2.0 * xi_ / (ai * ai)) / volume * (rate * xi_) +
                    (f / volume) * rate;
    }
    return std::abs(rho_t + div_flux);
}

std::vector<double> momentum_residual(const EmdenSpec& spec, const Profile& p,
                                      const Trajectory& traj, double t,
                                      std::span<const double> x,
                                      double support_margin) {
    const PhaseState st = state_at(traj, t);
    const int n = spec.dimension;
    const double s = similarity(spec, st, x);
    if (const auto b = p.boundary_s()) {
        if (std::abs(s - *b) < support_margin)
            throw SupportBoundaryError(
                "momentum_residual: sample within the support-boundary "
                "exclusion band");
    }
    const double f = profile_eval(p, s);
    if (!std::isfinite(f))
        throw DomainError(
            "momentum_residual: sample beyond the existence boundary");
    const double fp = profile_deriv(p, s);

    double volume = 1.0, div_rate = 0.0;
    for (int k = 0; k < n; ++k) {
        volume *= st.a[k];
        div_rate += st.adot[k] / st.a[k];
    }
    const std::vector<double> dydt = rhs(spec, st);

    // 2 theta f^(theta-1) f' is the radial factor of grad(rho^theta)
    // rescaled by the volume powers below; zero wherever the vacuum starts.
    const double grad_pref =
        f > 0.0 ? 2.0 * p.theta * std::pow(f, p.theta - 1.0) * fp : 0.0;
    const double vpow = std::pow(volume, p.theta);

    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double xi_ = x[i] + spec.drifts[i];
        const double ai = st.a[i];
        const double addot = dydt[n + i];
        const double lhs = (f / volume) * (addot / ai) * xi_;
        const double rate = st.adot[i] / ai;
        const double visc = grad_pref *
                            (spec.kappa1 * div_rate + spec.kappa2 * rate) *
                            xi_ / (vpow * ai * ai);
        out[i] = std::abs(lhs - visc);
    }
    return out;
}

FdResidual fd_oracle_residual(const EmdenSpec& spec, const Profile& p,
                              const Trajectory& traj, double t,
                              std::span<const double> x, double h) {
    const int n = spec.dimension;
    const double terminal = traj.terminal_time();
    const double tol = 1e-12 * std::max(1.0, terminal);
    if (!(h > 0.0)) throw DomainError("fd_oracle_residual: h must be > 0");
    if (t - 2.0 * h < -tol || t + 2.0 * h > terminal + tol)
        throw DomainError(
            "fd_oracle_residual: time stencil leaves the trajectory span");

    auto rho_at = [&](double tt, std::span<const double> xv) {
        return field_eval(spec, p, dense_eval(traj, tt), xv).rho;
    };
    auto u_at = [&](double tt, std::span<const double> xv, int i) {
        const PhaseState st = dense_eval(traj, tt);
        return st.adot[i] / st.a[i] * (xv[i] + spec.drifts[i]);
    };
    // 4th-order central first derivative of g along one offset variable.
    auto d4 = [h](auto&& g) {
        return (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) /
               (12.0 * h);
    };

    std::vector<double> xs(x.begin(), x.end());

    FdResidual out;
    // Mass: rho_t + sum_k d/dx_k (rho u_k).
    double mass = d4([&](double dt) { return rho_at(t + dt, xs); });
    for (int k = 0; k < n; ++k) {
        mass += d4([&](double dx) {
            std::vector<double> xv = xs;
            xv[k] += dx;
            return rho_at(t, xv) * u_at(t, xv, k);
        });
    }
    out.mass = std::abs(mass);

    // div u at an arbitrary point, itself by finite differences.
    auto divu_at = [&](double tt, std::span<const double> xv) {
        double d = 0.0;
        for (int k = 0; k < n; ++k) {
            d += d4([&](double dx) {
                std::vector<double> xw(xv.begin(), xv.end());
                xw[k] += dx;
                return u_at(tt, xw, k);
            });
        }
        return d;
    };

    out.momentum.resize(n);
    const double rho0 = rho_at(t, xs);
    for (int i = 0; i < n; ++i) {
        const double dudt = d4([&](double dt) { return u_at(t + dt, xs, i); });
        double conv = 0.0;
        for (int k = 0; k < n; ++k) {
            conv += u_at(t, xs, k) * d4([&](double dx) {
                        std::vector<double> xv = xs;
                        xv[k] += dx;
                        return u_at(t, xv, i);
                    });
        }
        const double lhs = rho0 * (dudt + conv);

        const double grad_div = d4([&](double dx) {
            std::vector<double> xv = xs;
            xv[i] += dx;
            return std::pow(rho_at(t, xv), spec.theta) * divu_at(t, xv);
        });
        double stress = 0.0;
        for (int k = 0; k < n; ++k) {
            stress += d4([&](double dx) {
                std::vector<double> xv = xs;
                xv[k] += dx;
                const double r = std::pow(rho_at(t, xv), spec.theta);
                const double duidxk = d4([&](double dx2) {
                    std::vector<double> xw = xv;
                    xw[k] += dx2;
                    return u_at(t, xw, i);
                });
                return r * duidxk;
            });
        }
        out.momentum[i] =
            std::abs(lhs - spec.kappa1 * grad_div - spec.kappa2 * stress);
    }
    return out;
}

namespace {

// Extreme values of the similarity variable over the finite-difference
// stencil reach (time nodes t + j h, spatial box |x' - x|_inf <= 4h), used
// to keep whole stencils on one side of the profile boundary.
std::pair<double, double> stencil_s_range(const EmdenSpec& spec,
                                          const Trajectory& traj, double t,
                                          std::span<const double> x,
                                          double h) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int j = -2; j <= 2; ++j) {
        const PhaseState st = dense_eval(traj, t + j * h);
        double s_lo = 0.0, s_hi = 0.0;
        for (int k = 0; k < spec.dimension; ++k) {
            const double xk = std::abs(x[k] + spec.drifts[k]);
            const double big = xk + 4.0 * h;
            const double small = std::max(xk - 4.0 * h, 0.0);
            s_hi += big * big / (st.a[k] * st.a[k]);
            s_lo += small * small / (st.a[k] * st.a[k]);
        }
        lo = std::min(lo, s_lo);
        hi = std::max(hi, s_hi);
    }
    return {lo, hi};
}

} // namespace

ResidualReport residual_report(const EmdenSpec& spec, const Profile& p,
                               const Trajectory& traj, ResidualMethod method,
                               const VerifyOptions& opts) {
    spec.validate();
    p.validate();
    if (opts.time_slices < 2 || opts.samples_per_slice < 1)
        throw ValidationError("residual_report: need >= 2 time slices and "
                              ">= 1 sample per slice");
    if (!(opts.time_fraction > 0.0 && opts.time_fraction <= 1.0))
        throw ValidationError("residual_report: time_fraction in (0, 1]");

    const int n = spec.dimension;
    const double terminal = traj.terminal_time();
    const double horizon = opts.time_fraction * terminal;
    const double h = opts.fd_h;
    const bool fd = method == ResidualMethod::FiniteDifference;
    if (fd && !(terminal > 4.2 * h))
        throw ValidationError(
            "residual_report: trajectory too short for the FD time stencil");

    ResidualReport report;
    report.method = method;
    report.momentum_residual_max.assign(n, 0.0);

    double mass_max = 0.0, scale = 0.0;
    std::vector<double> mom_max(n, 0.0);
    unsigned long long halton_idx = 0;
    const auto boundary = p.boundary_s();

    for (int j = 0; j < opts.time_slices; ++j) {
        double tj = horizon * j / (opts.time_slices - 1);
        if (fd) tj = std::clamp(tj, 2.001 * h, terminal - 2.001 * h);
        const PhaseState st = dense_eval(traj, tj);
        const std::vector<double> dydt = rhs(spec, st);
        double volume = 1.0;
        for (int k = 0; k < n; ++k) volume *= st.a[k];

        int kept = 0;
        long draws = 0;
        const long draw_cap = 1000L * opts.samples_per_slice;
        std::vector<double> x(n);
        while (kept < opts.samples_per_slice && draws < draw_cap) {
            ++draws;
            const auto idx = halton_idx++;
            for (int k = 0; k < n; ++k) {
                const double u = detail::halton(idx, k);
                x[k] = -spec.drifts[k] +
                       (2.0 * u - 1.0) * opts.box_factor * st.a[k];
            }
            if (boundary) {
                double s_lo, s_hi;
                if (fd) {
                    std::tie(s_lo, s_hi) =
                        stencil_s_range(spec, traj, tj, x, h);
                } else {
                    s_lo = s_hi = similarity(spec, st, x);
                }
                const bool inside = s_hi <= *boundary - opts.support_margin;
                const bool outside = p.theta > 1.0 &&
                                     s_lo >= *boundary + opts.support_margin;
                if (!inside && !outside) continue;
            }
            ++kept;
            report.sample_points.emplace_back(tj, x);

            // Normalization: sup |rho * (u_t + u.grad u)| = sup |rho
            // (addot_i/a_i) X_i| over samples and components.
            {
                const double f = profile_eval(p, similarity(spec, st, x));
                for (int i = 0; i < n; ++i) {
                    const double xi_ = x[i] + spec.drifts[i];
                    scale = std::max(scale, std::abs((f / volume) *
                                                     (dydt[n + i] / st.a[i]) *
                                                     xi_));
                }
            }

            if (fd) {
                const auto r = fd_oracle_residual(spec, p, traj, tj, x, h);
                mass_max = std::max(mass_max, r.mass);
                for (int i = 0; i < n; ++i)
                    mom_max[i] = std::max(mom_max[i], r.momentum[i]);
            } else {
                mass_max =
                    std::max(mass_max, mass_residual(spec, p, traj, tj, x));
                const auto r = momentum_residual(spec, p, traj, tj, x,
                                                 opts.support_margin);
                for (int i = 0; i < n; ++i)
                    mom_max[i] = std::max(mom_max[i], r[i]);
            }
        }
    }

    report.normalization = scale;
    const double denom = scale > 0.0 ? scale : 1.0;
    report.mass_residual_max = mass_max / denom;
    for (int i = 0; i < n; ++i)
        report.momentum_residual_max[i] = mom_max[i] / denom;
    return report;
}

} // namespace elf

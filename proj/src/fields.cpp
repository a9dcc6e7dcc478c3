#include "elf/fields.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace elf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void Profile::validate() const {
    if (!(kappa > 0.0)) throw ValidationError("profile kappa must be > 0");
    if (!(theta > 0.0))
        throw ValidationError(
            "profile theta must be > 0 (the defining relation divides by it)");
    if (alpha < 0.0) throw ValidationError("profile alpha must be >= 0");
}

std::optional<double> Profile::boundary_s() const {
    if (alpha <= 0.0 || theta == 1.0) return std::nullopt;
    const double slope = xi * (theta - 1.0); // base decreases iff slope > 0
    if (slope <= 0.0) return std::nullopt;
    return std::pow(alpha, theta - 1.0) * 2.0 * kappa * theta / slope;
}

Profile make_profile(const EmdenSpec& spec) {
    if (spec.system == SystemKind::P)
        throw ValidationError(
            "system P has no viscous profile; field verification covers "
            "systems A, BProof, BTheorem only");
    Profile p{spec.theta, spec.xi, spec.kappa(), spec.alpha};
    p.validate();
    return p;
}

// Base of the theta != 1 power form: alpha^(theta-1) - xi(theta-1)s/(2kt).
static double power_base(const Profile& p, double s) {
    return std::pow(p.alpha, p.theta - 1.0) -
           p.xi * (p.theta - 1.0) * s / (2.0 * p.kappa * p.theta);
}

double profile_eval(const Profile& p, double s) {
    if (s < 0.0) throw DomainError("profile_eval: s must be >= 0");
    if (p.alpha == 0.0) return 0.0;
    if (p.xi == 0.0) return p.alpha;
    if (p.theta == 1.0)
        return p.alpha * std::exp(-p.xi * s / (2.0 * p.kappa));
    const double base = power_base(p, s);
    if (base > 0.0) return std::pow(base, 1.0 / (p.theta - 1.0));
    return p.theta > 1.0 ? 0.0 : kInf;
}

double profile_deriv(const Profile& p, double s) {
    if (s < 0.0) throw DomainError("profile_deriv: s must be >= 0");
    if (p.alpha == 0.0 || p.xi == 0.0) return 0.0;
    const double c = -p.xi / (2.0 * p.kappa * p.theta);
    if (p.theta == 1.0)
        return c * p.alpha * std::exp(-p.xi * s / (2.0 * p.kappa));
    const double base = power_base(p, s);
    if (base > 0.0)
        return c * std::pow(base, (2.0 - p.theta) / (p.theta - 1.0));
    return p.theta > 1.0 ? 0.0 : kInf;
}

FieldSample field_eval(const EmdenSpec& spec, const Profile& p,
                       const PhaseState& state, std::span<const double> x) {
    const auto n = static_cast<std::size_t>(spec.dimension);
    if (x.size() != n)
        throw DomainError("field_eval: x must have N components");
    double volume = 1.0, s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!(state.a[k] > 0.0))
            throw DomainError("field_eval: all axis scales must be > 0");
        const double xk = x[k] + spec.drifts[k];
        volume *= state.a[k];
        s += xk * xk / (state.a[k] * state.a[k]);
    }
    FieldSample out;
    out.s = s;
    out.rho = profile_eval(p, s) / volume;
    out.u.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.u[i] = state.adot[i] / state.a[i] * (x[i] + spec.drifts[i]);
    return out;
}

bool mass_is_finite(const Profile& p, int dimension) {
    if (p.alpha == 0.0) return true;
    if (!(p.xi > 0.0)) return false;
    if (p.theta >= 1.0) return true;
    // Power-law tail f(r^2) ~ r^(2/(theta-1)); integrable against r^(N-1)
    // exactly when N (1 - theta) < 2.
    return dimension * (1.0 - p.theta) < 2.0;
}

namespace {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
constexpr double kKronrodNode[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double kKronrodWeight[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
constexpr double kGaussWeight[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct GkEstimate {
    double value = 0.0;
    double error = 0.0;
};

template <class F>
GkEstimate gauss_kronrod_15(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double kronrod = kKronrodWeight[7] * f(mid);
    double gauss = kGaussWeight[3] * f(mid);
    for (int i = 0; i < 7; ++i) {
        const double dx = hw * kKronrodNode[i];
        const double fsum = f(mid - dx) + f(mid + dx);
        kronrod += kKronrodWeight[i] * fsum;
        if (i % 2 == 1) gauss += kGaussWeight[i / 2] * fsum;
    }
    return {kronrod * hw, std::abs((kronrod - gauss) * hw)};
}

// Adaptive bisection until each piece meets its share of the tolerance.
template <class F>
double adaptive_quadrature(F&& f, double a, double b, double tol, int depth = 0) {
    const auto est = gauss_kronrod_15(f, a, b);
    if (est.error <= tol || depth >= 48) return est.value;
    const double mid = 0.5 * (a + b);
    return adaptive_quadrature(f, a, mid, 0.5 * tol, depth + 1) +
           adaptive_quadrature(f, mid, b, 0.5 * tol, depth + 1);
}

double unit_sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

} // namespace

double total_mass(const EmdenSpec& spec, const Profile& p,
                  const PhaseState& state) {
    p.validate();
    const int n = spec.dimension;
    for (int k = 0; k < n; ++k)
        if (!(state.a[k] > 0.0))
            throw DomainError("total_mass: all axis scales must be > 0");
    if (p.alpha == 0.0) return 0.0;
    if (!mass_is_finite(p, n)) return kInf;

    auto integrand = [&](double r) {
        return profile_eval(p, r * r) * std::pow(r, n - 1);
    };

    // Pick the outer radius so the neglected tail is below 1e-12 relative.
    double radius;
    if (p.theta == 1.0) {
        // Gaussian-type decay exp(-c r^2): c R^2 = 64 leaves ~1e-28.
        radius = std::sqrt(64.0 * 2.0 * p.kappa / p.xi);
    } else if (p.theta > 1.0) {
        radius = std::sqrt(*p.boundary_s()); // exact compact support
    } else {
        radius = 1.0; // grown below against the analytic tail bound
    }

    // Magnitude seed for the tolerance, then (for the power-law tails of
    // theta < 1) grow the radius until the analytic tail bound is
    // negligible: f(r^2) <= (c r^2)^(1/(theta-1)) beyond the core, so the
    // tail is bounded by c^(1/(theta-1)) R^q / (-q) with
    // q = 2/(theta-1) + N < 0.
    double rough = std::max(gauss_kronrod_15(integrand, 0.0, radius).value,
                            std::numeric_limits<double>::min());
    if (p.theta < 1.0) {
        const double c = p.xi * (1.0 - p.theta) / (2.0 * p.kappa * p.theta);
        const double q = 2.0 / (p.theta - 1.0) + n;
        const double cpow = std::pow(c, 1.0 / (p.theta - 1.0));
        for (int it = 0; it < 200; ++it) {
            const double tail = cpow * std::pow(radius, q) / (-q);
            if (tail <= 1e-12 * rough) break;
            rough += gauss_kronrod_15(integrand, radius, 2.0 * radius).value;
            radius *= 2.0;
        }
    }
    const double value =
        adaptive_quadrature(integrand, 0.0, radius, 1e-12 * rough);
    return unit_sphere_area(n) * value;
}

} // namespace elf

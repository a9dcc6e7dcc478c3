#pragma once

#include <optional>
#include <span>
#include <vector>

#include "elf/errors.hpp"
#include "elf/model.hpp"

namespace elf {

// Radial density profile f(s) in the similarity variable
// s = sum_k (x_k + d_k)^2 / a_k(t)^2, solving
//
//     xi/(2*kappa*theta) + f^(theta-2) f'(s) = 0,   f(0) = alpha.
//
// Closed forms:
//   theta == 1:  f(s) = alpha * exp(-xi s / (2 kappa))
//   theta != 1:  f(s) = (alpha^(theta-1) - xi (theta-1) s / (2 kappa theta))
//                       ^(1/(theta-1)),
// truncated to 0 where the base turns non-positive (theta > 1: vacuum
// beyond a compact support; theta < 1 with xi < 0: the profile grows
// without bound toward the boundary and does not continue past it).
struct Profile {
    double theta = 1.0;
    double xi = 0.0;
    double kappa = 1.0;
    double alpha = 1.0;

    void validate() const; // kappa > 0, theta > 0, alpha >= 0

    // s where the closed form reaches the edge of the classical regime:
    // the support boundary for theta > 1, xi > 0 (f == 0 beyond), or the
    // existence boundary for theta < 1, xi < 0 (f unbounded there).
    std::optional<double> boundary_s() const;

    bool operator==(const Profile&) const = default;
};

// Builds the profile driven by whichever viscosity is active.  System P
// has no profile here; this throws ValidationError for it.
Profile make_profile(const EmdenSpec& spec);

// f(s).  Throws DomainError for s < 0.  Returns +infinity past the
// existence boundary (theta < 1, xi < 0), where no classical value exists.
double profile_eval(const Profile& p, double s);

// Closed-form f'(s); 0 on the vacuum side of a compact support.
double profile_deriv(const Profile& p, double s);

// Density, velocity, and the similarity variable of the exact flow at one
// space-time point.
struct FieldSample {
    double rho = 0.0;
    std::vector<double> u;
    double s = 0.0;
};

FieldSample field_eval(const EmdenSpec& spec, const Profile& p,
                       const PhaseState& state, std::span<const double> x);

// True when the profile has finite total mass in `dimension` dimensions.
bool mass_is_finite(const Profile& p, int dimension);

// Total mass integral(rho dx) over R^N.  After substituting
// y_k = (x_k + d_k)/a_k this is surface(S^{N-1}) * integral f(r^2) r^(N-1) dr,
// independent of the state; evaluated by adaptive Gauss-Kronrod quadrature
// with an analytic tail bound below 1e-12 relative.  Returns +infinity when
// the profile is not integrable.
double total_mass(const EmdenSpec& spec, const Profile& p,
                  const PhaseState& state);

} // namespace elf

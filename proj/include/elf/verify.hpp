#pragma once

#include <span>
#include <vector>

#include "elf/fields.hpp"
#include "elf/integrator.hpp"
#include "elf/model.hpp"

namespace elf {

enum class ResidualMethod { Analytic, FiniteDifference };
const char* to_string(ResidualMethod m);

// Pointwise residual of the mass equation, |rho_t + div(rho u)|, with every
// derivative taken in closed form from the profile and the trajectory's
// dense output.  Identically zero in exact arithmetic for any trajectory;
// numerically it cancels to rounding level.
double mass_residual(const EmdenSpec& spec, const Profile& p,
                     const Trajectory& traj, double t,
                     std::span<const double> x);

// Pointwise residual of the momentum equations,
//   | rho (u_t + u.grad u)_i - kappa1 d_i(rho^theta div u)
//                           - kappa2 div(rho^theta grad u_i) |,
// computed analytically.  The acceleration addot is taken from the
// governing vector field (not from differentiating the interpolant), so the
// result adjudicates the algebra of the reduction rather than integration
// error.  Throws SupportBoundaryError for samples within `support_margin`
// of the profile boundary in s, where the fields are not smooth.
std::vector<double> momentum_residual(const EmdenSpec& spec, const Profile& p,
                                      const Trajectory& traj, double t,
                                      std::span<const double> x,
                                      double support_margin = 1e-3);

// Independent cross-check: both residuals evaluated from 4th-order central
// finite differences of the black-box fields (t and x steps of size h).
// Needs t +- 2h inside the trajectory span.
struct FdResidual {
    double mass = 0.0;
    std::vector<double> momentum;
};
FdResidual fd_oracle_residual(const EmdenSpec& spec, const Profile& p,
                              const Trajectory& traj, double t,
                              std::span<const double> x, double h);

struct VerifyOptions {
    int samples_per_slice = 10;
    int time_slices = 10;
    double time_fraction = 0.9; // verify over [0, fraction * terminal]
    double box_factor = 2.0;    // sample box [-d_i +- factor * a_i(t)]
    double support_margin = 1e-3;
    double fd_h = 1e-3;
};

// Residual sweep over quasi-random space-time samples.  Residual maxima are
// reported relative to `normalization` = sup |rho (u_t + u.grad u)| over
// the samples (raw values are reported if that scale vanishes).
struct ResidualReport {
    std::vector<std::pair<double, std::vector<double>>> sample_points;
    double mass_residual_max = 0.0;
    std::vector<double> momentum_residual_max; // per component
    ResidualMethod method = ResidualMethod::Analytic;
    double normalization = 0.0;

    double worst_momentum() const;
};

ResidualReport residual_report(const EmdenSpec& spec, const Profile& p,
                               const Trajectory& traj, ResidualMethod method,
                               const VerifyOptions& opts = {});

namespace detail {
// Halton low-discrepancy sequence: radical-inverse of `index` in the
// dim-th prime base (dim 0-based), in (0, 1).
double halton(unsigned long long index, int dim);
}

} // namespace elf

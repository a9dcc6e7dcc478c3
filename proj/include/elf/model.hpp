#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "elf/errors.hpp"

namespace elf {

// The four Emden-type systems for the axis scales a_i(t) of an
// ellipsoidally self-similar flow.  Writing V = prod_k a_k and
// S = sum_k adot_k/a_k (the velocity divergence), the accelerations are
//
//   A         addot_i = -xi * S      / (a_i   * V^(theta-1))
//   BProof    addot_i = -xi * adot_i / (a_i^2 * V^(theta-1))
//   BTheorem  addot_i = -xi * adot_i /  a_i^(N*(theta-1)+2)
//   P         addot_i = +xi          / (a_i   * V^(gamma-1))
//
// A arises from the gradient-of-divergence viscosity, BProof and BTheorem
// are two candidate reductions of the stress-divergence viscosity (BProof
// coupled through the volume, BTheorem fully decoupled per axis), and P is
// the inviscid pressure system, where the `theta` slot carries gamma.
enum class SystemKind { A, BProof, BTheorem, P };

const char* to_string(SystemKind k);
SystemKind system_from_string(std::string_view s); // throws ValidationError

// Full parameterization of one scale-dynamics problem.
struct EmdenSpec {
    SystemKind system = SystemKind::A;
    int dimension = 1;     // N, number of spatial axes
    double theta = 1.0;    // viscosity exponent (gamma when system == P)
    double xi = 0.0;       // similarity/separation constant
    double kappa1 = 0.0;   // gradient-of-divergence viscosity coefficient
    double kappa2 = 0.0;   // stress-divergence viscosity coefficient
    double alpha = 0.0;    // profile center value f(0)
    std::vector<double> drifts; // d_i, center offsets of the ellipsoid
    std::vector<double> a0;     // initial axis scales, all > 0
    std::vector<double> a1;     // initial axis velocities

    // The viscosity constant that drives the selected system (kappa1 for A,
    // kappa2 for the B variants, the pressure constant slot for P).
    double kappa() const;

    // Throws ValidationError on any broken invariant (sizes, signs,
    // exactly-one-viscosity rule, ...).
    void validate() const;

    bool operator==(const EmdenSpec&) const = default;
};

// Point on a trajectory: axis scales and their velocities at time t.
struct PhaseState {
    double t = 0.0;
    std::vector<double> a;
    std::vector<double> adot;

    bool operator==(const PhaseState&) const = default;
};

PhaseState initial_state(const EmdenSpec& spec);

// Flat layout used by the integrator: y = (a_1..a_N, adot_1..adot_N).
PhaseState unpack_state(int dimension, double t, std::span<const double> y);
void pack_state(const PhaseState& state, std::span<double> y);

// Writes (adot, addot) into dydt.  Returns false (without touching dydt's
// validity) when some a_i <= 0, i.e. the state left the domain.
bool rhs_flat(const EmdenSpec& spec, std::span<const double> y,
              std::span<double> dydt) noexcept;

// Phase-space vector field (adot, addot).  Throws DomainError when some
// a_i <= 0.
std::vector<double> rhs(const EmdenSpec& spec, const PhaseState& state);

// 2N x 2N Jacobian of the phase-space vector field by central finite
// differences, step h_i = 1e-6*|v_i| + 1e-9 per coordinate.  Steps that
// would push an axis scale non-positive are halved (at most five times)
// before giving up with DomainError.
Eigen::MatrixXd jacobian(const EmdenSpec& spec, const PhaseState& state);

} // namespace elf

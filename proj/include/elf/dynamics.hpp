#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "elf/integrator.hpp"
#include "elf/model.hpp"

// Long-time behaviour of the scaling-factor systems: blowup-versus-global
// classification, the closed-form blowup-time bound and its verification,
// per-axis first integrals of the decoupled systems, Lyapunov spectra via
// tangent-space integration with QR re-orthonormalization, Poincare sections
// with recurrence statistics, and parameter sweeps over spec grids.

namespace elf {

enum class Classification {
    BlowupDetected, // some a_i reached the blowup floor at finite time
    GlobalBounded,  // reached t_end with a_i confined to a moderate band
    GlobalGrowing,  // escaped the ceiling, or reached t_end still growing
    Undetermined,   // the integrator failed before any verdict
};

const char* to_string(Classification c);

// min over {i : a_i1 < 0} of (-a_i0 / a_i1) whenever the concavity argument
// applies: xi < 0 and all a_i1 < 0 (system A) or some a_i1 < 0 (B variants).
// nullopt when no finite-time bound is guaranteed.
std::optional<double> theorem_bound(const EmdenSpec& spec);

// True when the complementary hypothesis holds (xi < 0, every a_i1 >= 0), in
// which case the solution is predicted to exist for all time.
bool theorem_predicts_global(const EmdenSpec& spec);

// Maps a finished trajectory onto the four-way verdict above.  A run that
// reached t_end counts as bounded only if max a_i stayed three decades under
// the escape ceiling and the overall a-range spans less than six decades.
Classification classify(const Trajectory& traj);

// Conserved quantities I_i = adot_i + xi a_i^(1-m)/(1-m), m = N(theta-1)+2,
// for the systems whose axes decouple (BTheorem with m != 1; BProof at
// theta=1; A at theta=1, N=1; every system at xi=0, where I_i = adot_i).
// nullopt when no per-axis integral is known.
std::optional<std::vector<double>> first_integral(const EmdenSpec& spec,
                                                  const PhaseState& state);

// max_i sup_t |I_i(t) - I_i(0)| over the trajectory's sample grid; nullopt
// when first_integral does not apply.
std::optional<double> first_integral_drift(const EmdenSpec& spec,
                                           const Trajectory& traj);

struct LyapunovResult {
    std::vector<double> spectrum; // descending, one per phase-space dimension
    std::vector<double> sigma;    // standard error of each exponent estimate
    double t_span = 0.0;
    int segments = 0;
};

// Benettin's method: integrates 2N orthonormal tangent vectors alongside the
// flow (finite-difference Jacobian), re-orthonormalizing every renorm_dt and
// accumulating log of the QR diagonal; lambda_j = sum(log r_jj) / t_span.
// The transient [0, t_transient] is discarded first.  Throws
// BlowupDuringLyapunov if the trajectory leaves the admissible region before
// t_transient + t_span.
LyapunovResult lyapunov_spectrum(const EmdenSpec& spec,
                                 const IntegrationConfig& cfg,
                                 double t_transient, double t_span,
                                 double renorm_dt);

// A section hyperplane: either the zero set of the volume expansion rate
// sum_k adot_k/a_k, or the coordinate plane a_axis = value.
struct Section {
    enum class Kind { ExpansionRate, Coordinate };
    enum class Direction { Decreasing, Increasing, Both };

    Kind kind = Kind::ExpansionRate;
    Direction direction = Direction::Decreasing;
    int axis = 0;       // Coordinate sections: which scaling factor
    double value = 0.0; // Coordinate sections: crossing level
};

struct PoincareTrace {
    std::vector<double> times;
    // One point per crossing, projected to R^(2N-1) by dropping the
    // section-determined coordinate (adot_1 for expansion-rate sections,
    // a_axis for coordinate sections), ordered by time.
    std::vector<std::vector<double>> points;
};

// Locates direction-filtered section crossings by scanning the dense output
// and bisecting each bracketed sign change.
PoincareTrace poincare_section(const Trajectory& traj, const Section& section);

// Minimum Euclidean distance between consecutive section points; +inf when
// fewer than two points exist.
double recurrence_minimum(const std::vector<std::vector<double>>& points);

struct AnalysisOptions {
    bool poincare = true;
    std::optional<Section> section; // unset -> expansion rate, decreasing

    bool lyapunov = false; // opt-in: costs a long auxiliary integration
    double lyap_transient = 20.0;
    double lyap_span = 500.0;
    double lyap_renorm_dt = 0.5;
};

// Everything analyze() and sweep() can report about one run.  `error` holds
// the diagnostic when a run failed outright (classification Undetermined).
struct RunReport {
    EmdenSpec spec;
    Classification classification = Classification::Undetermined;
    std::optional<double> blowup_time;   // t* when blowup was detected
    std::optional<double> theorem_bound; // T when a blowup bound applies
    std::optional<bool> bound_satisfied; // t* <= T + 1e-6 max(1,T)
    bool global_predicted = false;       // xi < 0 and all adot_i(0) >= 0
    std::optional<double> first_integral_drift;
    std::optional<LyapunovResult> lyapunov;
    bool chaotic_candidate = false; // lambda_1 > 3 sigma_1 (evidence only)
    std::vector<std::vector<double>> poincare_points;
    double recurrence_min = std::numeric_limits<double>::infinity();
    bool periodic_candidate = false; // recurrence_min < 1e-4 (evidence only)
    Termination termination{};
    std::string error;
};

// Integrates one spec and assembles the full report; never throws for
// per-run numerical failures (they are recorded in `error`).
RunReport analyze(const EmdenSpec& spec, const IntegrationConfig& cfg,
                  const AnalysisOptions& opts = {});

// Runs analyze over a grid with a bounded worker pool (workers <= 0 selects
// the hardware concurrency); the result order matches the input order and
// individual failures never abort the sweep.
std::vector<RunReport> sweep(const std::vector<EmdenSpec>& grid,
                             const IntegrationConfig& cfg,
                             const AnalysisOptions& opts = {},
                             int workers = 0);

} // namespace elf

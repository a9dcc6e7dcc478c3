#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "elf/errors.hpp"
#include "elf/model.hpp"

namespace elf {

// Tolerances and guards for one integration run.
struct IntegrationConfig {
    double t_end = 1.0;
    double rtol = 1e-9;
    double atol = 1e-12;
    double blowup_floor = 1e-8;    // stop when some a_i reaches this
    double escape_ceiling = 1e12;  // stop when some |a_i| or |adot_i| reaches this
    long max_steps = 10'000'000;
    double dense_dt = 0.0;         // output sample spacing; 0 -> t_end/1024

    bool operator==(const IntegrationConfig&) const = default;

    double resolved_dense_dt() const {
        return dense_dt > 0.0 ? dense_dt : t_end / 1024.0;
    }
    // Throws ValidationError (needs the problem to check the floor/ceiling
    // against the initial state).
    void validate(const EmdenSpec& spec) const;
};

enum class TerminationKind {
    ReachedTEnd,  // integrated through [0, t_end]
    BlowupEvent,  // some a_i hit the blowup floor at time `time`
    EscapeEvent,  // some |a_i| or |adot_i| hit the escape ceiling
    StepFailure,  // step size underflow or step budget exhausted
};
const char* to_string(TerminationKind k);

struct Termination {
    TerminationKind kind = TerminationKind::ReachedTEnd;
    double time = 0.0;
    int component = -1; // offending axis for the two event kinds

    bool operator==(const Termination&) const = default;
};

namespace detail {

// Dormand-Prince 5(4) Butcher tableau.
namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-order weights minus the embedded 4th-order weights.
inline constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                        e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                        e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;
// Weights of the 4th-order dense-output correction term.
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;
} // namespace dp

// One accepted step, stored as the coefficients of the quartic dense
// interpolant u(t0 + q*h) = r1 + q(r2 + (1-q)(r3 + q(r4 + (1-q) r5))),
// which collocates the endpoint values and endpoint derivatives.
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;

    void eval(double t, std::span<double> out) const {
        const double q = std::clamp((t - t0) / h, 0.0, 1.0);
        const double q1 = 1.0 - q;
        for (std::size_t i = 0; i < r1.size(); ++i)
            out[i] = r1[i] + q * (r2[i] + q1 * (r3[i] + q * (r4[i] + q1 * r5[i])));
    }
    std::vector<double> eval(double t) const {
        std::vector<double> out(r1.size());
        eval(t, out);
        return out;
    }
};

// Scratch vectors for one step; reused across steps.
struct Dopri5Work {
    std::vector<double> k2, k3, k4, k5, k6, ytmp;
    explicit Dopri5Work(std::size_t n)
        : k2(n), k3(n), k4(n), k5(n), k6(n), ytmp(n) {}
};

// One embedded 5(4) step.  FSAL: k1 must hold f(t, y) on entry; on success
// k7 receives f(t+h, ynew), which is k1 of the next step.  `err` receives
// the componentwise local error estimate.  Returns false when a stage left
// the callable's domain (the attempt must then be retried with smaller h).
template <class F>
bool dopri5_step(F&& f, double t, std::span<const double> y,
                 std::span<const double> k1, double h, Dopri5Work& w,
                 std::span<double> ynew, std::span<double> k7,
                 std::span<double> err) {
    using namespace dp;
    const std::size_t n = y.size();

    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * a21 * k1[i];
    if (!f(t + c2 * h, w.ytmp, w.k2)) return false;

    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * w.k2[i]);
    if (!f(t + c3 * h, w.ytmp, w.k3)) return false;

    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * w.k2[i] + a43 * w.k3[i]);
    if (!f(t + c4 * h, w.ytmp, w.k4)) return false;

    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * w.k2[i] + a53 * w.k3[i] +
                                a54 * w.k4[i]);
    if (!f(t + c5 * h, w.ytmp, w.k5)) return false;

    for (std::size_t i = 0; i < n; ++i)
        w.ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * w.k2[i] + a63 * w.k3[i] +
                                a64 * w.k4[i] + a65 * w.k5[i]);
    if (!f(t + h, w.ytmp, w.k6)) return false;

    for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (b1 * k1[i] + b3 * w.k3[i] + b4 * w.k4[i] +
                              b5 * w.k5[i] + b6 * w.k6[i]);
    if (!f(t + h, ynew, k7)) return false;

    for (std::size_t i = 0; i < n; ++i)
        err[i] = h * (e1 * k1[i] + e3 * w.k3[i] + e4 * w.k4[i] + e5 * w.k5[i] +
                      e6 * w.k6[i] + e7 * k7[i]);
    return true;
}

// Scaled RMS norm of the local error estimate; <= 1 accepts the step.
inline double error_norm(std::span<const double> err, std::span<const double> y,
                         std::span<const double> ynew, double atol, double rtol) {
    double sum = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = err[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

// Builds the dense-output coefficients of an accepted step.
inline DenseStep make_dense(double t, double h, std::span<const double> y,
                            std::span<const double> ynew,
                            std::span<const double> k1,
                            std::span<const double> k7, const Dopri5Work& w) {
    using namespace dp;
    const std::size_t n = y.size();
    DenseStep seg;
    seg.t0 = t;
    seg.h = h;
    seg.r1.assign(y.begin(), y.end());
    seg.r2.resize(n);
    seg.r3.resize(n);
    seg.r4.resize(n);
    seg.r5.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = ynew[i] - y[i];
        seg.r2[i] = dy;
        seg.r3[i] = h * k1[i] - dy;
        seg.r4[i] = dy - h * k7[i] - seg.r3[i];
        seg.r5[i] = h * (d1 * k1[i] + d3 * w.k3[i] + d4 * w.k4[i] +
                         d5 * w.k5[i] + d6 * w.k6[i] + d7 * k7[i]);
    }
    return seg;
}

// PI step-size controller (error exponent 1/5 with a small integral term).
struct PiController {
    static constexpr double kSafe = 0.9;
    static constexpr double kBeta = 0.04;
    static constexpr double kExpo = 0.2 - 0.75 * kBeta;
    double facold = 1e-4;
    bool rejected = false;

    double accept(double h, double err) {
        const double fac11 = std::pow(err, kExpo);
        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::max(0.1, std::min(5.0, fac / kSafe));
        double hnew = h / fac;
        if (rejected) hnew = std::min(hnew, h); // no growth right after a reject
        facold = std::max(err, 1e-4);
        rejected = false;
        return hnew;
    }
    double reject(double h, double err) {
        const double fac11 = std::pow(err, kExpo);
        rejected = true;
        return h / std::min(5.0, fac11 / kSafe);
    }
};

struct DriverOpts {
    double rtol = 1e-9;
    double atol = 1e-12;
    long max_steps = 10'000'000; // accepted-step budget
    double h0 = 0.0;             // initial step; 0 selects one automatically
};

enum class DriveStatus {
    ReachedEnd,
    ObserverStop,
    StepUnderflow,
    BudgetExhausted,
    BadInitialState,
};

struct DriveResult {
    DriveStatus status = DriveStatus::ReachedEnd;
    double t = 0.0;
    long accepted = 0;
};

// Initial step size in the spirit of the classical two-derivative estimate:
// balance the magnitudes of y and f(y), then refine with one Euler probe.
template <class F>
double initial_step(F&& f, double t0, double span, std::span<const double> y,
                    std::span<const double> f0, double rtol, double atol,
                    std::vector<double>& ytmp, std::vector<double>& ftmp) {
    const std::size_t n = y.size();
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y[i]);
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1 = std::sqrt(d1 / static_cast<double>(n));
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, span);

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * f0[i];
    if (!f(t0 + h, ytmp, ftmp)) return std::min(h * 1e-2, span);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(y[i]);
        const double r = (ftmp[i] - f0[i]) / sc;
        d2 += r * r;
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h;

    const double der = std::max(d1, d2);
    const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                   : std::pow(0.01 / der, 0.2);
    return std::min({100.0 * h, h1, span});
}

// Adaptive driver over [t0, t1].  The observer is called once per accepted
// step with the dense segment and the endpoint state; returning false stops
// the integration (status ObserverStop).  On return, y holds the state at
// the end of the last accepted step.
template <class F, class OnStep>
DriveResult drive(F&& f, double t0, double t1, std::span<double> y,
                  const DriverOpts& opts, OnStep&& on_step) {
    const std::size_t n = y.size();
    std::vector<double> k1(n), k7(n), ynew(n), errv(n), ftmp(n), ytmp(n);
    Dopri5Work work(n);
    PiController ctl;

    if (!f(t0, y, k1)) return {DriveStatus::BadInitialState, t0, 0};
    double h = opts.h0 > 0.0
                   ? std::min(opts.h0, t1 - t0)
                   : initial_step(f, t0, t1 - t0, y, k1, opts.rtol, opts.atol,
                                  ytmp, ftmp);

    DriveResult res;
    double t = t0;
    long attempts = 0;
    const long attempt_budget = 2 * opts.max_steps + 1000;

    while (t < t1) {
        if (res.accepted >= opts.max_steps || attempts >= attempt_budget)
            return {DriveStatus::BudgetExhausted, t, res.accepted};
        // h below one ulp of t cannot advance the clock: the step size has
        // underflowed (the only scale-free stall criterion; an absolute
        // floor would misfire whenever t1 dwarfs the dynamical time scale).
        if (t + h == t)
            return {DriveStatus::StepUnderflow, t, res.accepted};

        bool last = false;
        if (h >= t1 - t) {
            h = t1 - t;
            last = true;
        }
        ++attempts;

        if (!dopri5_step(f, t, y, k1, h, work, ynew, k7, errv)) {
            // A stage left the domain; retry with a smaller step.
            h *= 0.5;
            ctl.rejected = true;
            continue;
        }
        double err = error_norm(errv, y, ynew, opts.atol, opts.rtol);
        if (!std::isfinite(err)) {
            h *= 0.5;
            ctl.rejected = true;
            continue;
        }

        if (err <= 1.0) {
            DenseStep seg = make_dense(t, h, y, ynew, k1, k7, work);
            const double t_next = last ? t1 : t + h;
            std::copy(ynew.begin(), ynew.end(), y.begin());
            std::copy(k7.begin(), k7.end(), k1.begin()); // FSAL
            ++res.accepted;
            h = ctl.accept(h, err);
            if (!on_step(std::as_const(seg), std::span<const double>(y)))
                return {DriveStatus::ObserverStop, t_next, res.accepted};
            t = t_next;
        } else {
            h = ctl.reject(h, err);
        }
    }
    return {DriveStatus::ReachedEnd, t, res.accepted};
}

} // namespace detail

// Result of integrating one spec: uniformly spaced samples (plus the
// terminal state), the dense-output segments, and why integration stopped.
struct Trajectory {
    EmdenSpec spec;
    IntegrationConfig cfg;
    std::vector<PhaseState> samples;
    Termination termination;
    std::vector<detail::DenseStep> steps;

    double terminal_time() const { return samples.back().t; }
    const PhaseState& terminal_state() const { return samples.back(); }
};

// Integrates the given scale dynamics over [0, cfg.t_end] with event
// detection (blowup floor, escape ceiling).  Deterministic: identical
// inputs produce identical trajectories.
Trajectory integrate(const EmdenSpec& spec, const IntegrationConfig& cfg);

// Evaluates the dense interpolant at any t in [0, terminal_time].
// Throws RangeError outside the integrated span.
PhaseState dense_eval(const Trajectory& traj, double t);

} // namespace elf

#include "elf/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace elf {

const char* to_string(TerminationKind k) {
    switch (k) {
    case TerminationKind::ReachedTEnd: return "ReachedTEnd";
    case TerminationKind::BlowupEvent: return "BlowupEvent";
    case TerminationKind::EscapeEvent: return "EscapeEvent";
    case TerminationKind::StepFailure: return "StepFailure";
    }
    return "?";
}

void IntegrationConfig::validate(const EmdenSpec& spec) const {
    if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
    if (!(rtol > 0.0)) throw ValidationError("rtol must be > 0");
    if (!(atol > 0.0)) throw ValidationError("atol must be > 0");
    if (!(blowup_floor > 0.0))
        throw ValidationError("blowup_floor must be > 0");
    const double a_min = *std::min_element(spec.a0.begin(), spec.a0.end());
    if (!(blowup_floor < a_min))
        throw ValidationError("blowup_floor must be < min(a0)");
    if (!(escape_ceiling > 0.0))
        throw ValidationError("escape_ceiling must be > 0");
    for (std::size_t i = 0; i < spec.a0.size(); ++i)
        if (std::abs(spec.a0[i]) >= escape_ceiling ||
            std::abs(spec.a1[i]) >= escape_ceiling)
            throw ValidationError(
                "initial state already beyond the escape ceiling");
    if (max_steps <= 0) throw ValidationError("max_steps must be > 0");
    if (dense_dt < 0.0) throw ValidationError("dense_dt must be >= 0");
}

namespace {

// Distance of the state above the blowup floor; <= 0 triggers the event.
double blowup_gap(std::span<const double> y, int n, double floor) {
    double m = y[0];
    for (int i = 1; i < n; ++i) m = std::min(m, y[i]);
    return m - floor;
}

// Distance below the escape ceiling; <= 0 triggers the event.
double escape_gap(std::span<const double> y, int n, double ceiling) {
    double m = 0.0;
    for (int i = 0; i < 2 * n; ++i) m = std::max(m, std::abs(y[i]));
    return ceiling - m;
}

int blowup_component(std::span<const double> y, int n) {
    int arg = 0;
    for (int i = 1; i < n; ++i)
        if (y[i] < y[arg]) arg = i;
    return arg;
}

int escape_component(std::span<const double> y, int n) {
    int arg = 0;
    double best = 0.0;
    for (int i = 0; i < 2 * n; ++i)
        if (std::abs(y[i]) > best) {
            best = std::abs(y[i]);
            arg = i;
        }
    return arg % n; // report the axis, whether a or adot escaped
}

// Bisects g(t) <= 0 inside [lo, hi] (g(lo) > 0 >= g(hi)) on the dense
// segment, to a bracket width of rtol * max(1, t).
template <class G>
double bisect_crossing(const detail::DenseStep& seg, G&& g, double lo,
                       double hi, double rtol) {
    std::vector<double> buf(seg.r1.size());
    for (int it = 0; it < 200; ++it) {
        if (hi - lo <= rtol * std::max(1.0, std::abs(hi))) break;
        const double mid = 0.5 * (lo + hi);
        seg.eval(mid, buf);
        if (g(buf) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

} // namespace

Trajectory integrate(const EmdenSpec& spec, const IntegrationConfig& cfg) {
    spec.validate();
    cfg.validate(spec);

    const int n = spec.dimension;
    const std::size_t dim = 2 * static_cast<std::size_t>(n);

    Trajectory traj;
    traj.spec = spec;
    traj.cfg = cfg;

    std::vector<double> y(dim);
    pack_state(initial_state(spec), y);

    auto f = [&spec](double, std::span<const double> yv,
                     std::span<double> dydt) {
        return rhs_flat(spec, yv, dydt);
    };
    auto g_blow = [&](std::span<const double> yv) {
        return blowup_gap(yv, n, cfg.blowup_floor);
    };
    auto g_esc = [&](std::span<const double> yv) {
        return escape_gap(yv, n, cfg.escape_ceiling);
    };

    Termination term{TerminationKind::ReachedTEnd, cfg.t_end, -1};

    // Scanning resolution for event sign changes inside one accepted step.
    constexpr int kScan = 8;
    std::vector<double> buf(dim);

    auto observer = [&](const detail::DenseStep& seg,
                        std::span<const double>) {
        const double t_hi = seg.t0 + seg.h;
        double tau_prev = seg.t0;
        seg.eval(tau_prev, buf);
        double gb_prev = g_blow(buf);
        double ge_prev = g_esc(buf);
        for (int j = 1; j <= kScan; ++j) {
            const double tau =
                seg.t0 + seg.h * static_cast<double>(j) / kScan;
            seg.eval(std::min(tau, t_hi), buf);
            const double gb = g_blow(buf);
            const double ge = g_esc(buf);
            const bool blow_hit = gb_prev > 0.0 && gb <= 0.0;
            const bool esc_hit = ge_prev > 0.0 && ge <= 0.0;
            if (blow_hit || esc_hit) {
                double t_blow = std::numeric_limits<double>::infinity();
                double t_escp = std::numeric_limits<double>::infinity();
                if (blow_hit)
                    t_blow = bisect_crossing(seg, g_blow, tau_prev, tau,
                                             cfg.rtol);
                if (esc_hit)
                    t_escp = bisect_crossing(seg, g_esc, tau_prev, tau,
                                             cfg.rtol);
                if (t_blow <= t_escp) {
                    seg.eval(t_blow, buf);
                    term = {TerminationKind::BlowupEvent, t_blow,
                            blowup_component(buf, n)};
                } else {
                    seg.eval(t_escp, buf);
                    term = {TerminationKind::EscapeEvent, t_escp,
                            escape_component(buf, n)};
                }
                traj.steps.push_back(seg);
                return false;
            }
            tau_prev = tau;
            gb_prev = gb;
            ge_prev = ge;
        }
        traj.steps.push_back(seg);
        return true;
    };

    detail::DriverOpts opts;
    opts.rtol = cfg.rtol;
    opts.atol = cfg.atol;
    opts.max_steps = cfg.max_steps;

    const auto res = detail::drive(f, 0.0, cfg.t_end, std::span<double>(y),
                                   opts, observer);

    double terminal = cfg.t_end;
    switch (res.status) {
    case detail::DriveStatus::ReachedEnd:
        terminal = cfg.t_end;
        break;
    case detail::DriveStatus::ObserverStop:
        terminal = term.time;
        break;
    case detail::DriveStatus::StepUnderflow: {
        // For a superlinear collapse a_i ~ (t*-t)^(1/m), the floor event is
        // unreachable in double precision: the state stalls at
        // a_i ~ (eps t*)^(1/m) while the step size underflows just below the
        // singular time.  An underflow whose smallest axis has shrunk and is
        // still falling is that singularity, so report it as the blowup it
        // is; underflow without collapse evidence stays a step failure.
        const int arg = blowup_component(std::span<const double>(y), n);
        const bool collapsing =
            y[arg] < 0.9 * spec.a0[arg] && y[n + arg] < 0.0;
        term = collapsing
                   ? Termination{TerminationKind::BlowupEvent, res.t, arg}
                   : Termination{TerminationKind::StepFailure, res.t, -1};
        terminal = res.t;
        break;
    }
    case detail::DriveStatus::BudgetExhausted:
        term = {TerminationKind::StepFailure, res.t, -1};
        terminal = res.t;
        break;
    case detail::DriveStatus::BadInitialState:
        throw DomainError("integrate: initial state is outside the domain");
    }
    traj.termination = term;

    // Uniform samples, then the terminal state (never duplicated).
    const double dt = cfg.resolved_dense_dt();
    const double t_tol = 1e-12 * std::max(1.0, terminal);
    if (traj.steps.empty()) {
        // Nothing was accepted (immediate failure); record the initial state.
        traj.samples.push_back(initial_state(spec));
        return traj;
    }
    for (long k = 0;; ++k) {
        const double tk = static_cast<double>(k) * dt;
        if (tk >= terminal - t_tol) break;
        const auto& seg = *std::prev(std::upper_bound(
            traj.steps.begin(), traj.steps.end(), tk,
            [](double t, const detail::DenseStep& s) { return t < s.t0; }));
        seg.eval(tk, buf);
        traj.samples.push_back(unpack_state(n, tk, buf));
    }
    traj.steps.back().eval(terminal, buf);
    if (res.status == detail::DriveStatus::ReachedEnd) {
        // Use the stepper's endpoint state verbatim rather than the
        // interpolant's rounding of it.
        std::copy(y.begin(), y.end(), buf.begin());
    }
    traj.samples.push_back(unpack_state(n, terminal, buf));
    return traj;
}

PhaseState dense_eval(const Trajectory& traj, double t) {
    const double terminal = traj.terminal_time();
    const double tol = 1e-12 * std::max(1.0, std::abs(terminal));
    if (t < -tol || t > terminal + tol)
        throw RangeError("dense_eval: t=" + std::to_string(t) +
                         " outside [0, " + std::to_string(terminal) + "]");
    if (traj.steps.empty()) return traj.samples.front();
    const double tc = std::clamp(t, 0.0, terminal);
    const auto it = std::prev(std::upper_bound(
        traj.steps.begin(), traj.steps.end(), tc,
        [](double tv, const detail::DenseStep& s) { return tv < s.t0; }));
    std::vector<double> buf(it->r1.size());
    it->eval(tc, buf);
    return unpack_state(traj.spec.dimension, tc, buf);
}

} // namespace elf

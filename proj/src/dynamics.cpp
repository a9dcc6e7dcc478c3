#include "elf/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "elf/errors.hpp"

namespace elf {

const char* to_string(Classification c) {
    switch (c) {
    case Classification::BlowupDetected: return "blowup_detected";
    case Classification::GlobalBounded: return "global_bounded";
    case Classification::GlobalGrowing: return "global_growing";
    case Classification::Undetermined: return "undetermined";
    }
    return "undetermined";
}

std::optional<double> theorem_bound(const EmdenSpec& spec) {
    if (!(spec.xi < 0.0) || spec.system == SystemKind::P) return std::nullopt;
    int negative = 0;
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.dimension; ++i) {
        if (spec.a1[i] < 0.0) {
            ++negative;
            bound = std::min(bound, -spec.a0[i] / spec.a1[i]);
        }
    }
    const bool applies = spec.system == SystemKind::A
                             ? negative == spec.dimension
                             : negative > 0;
    if (!applies) return std::nullopt;
    return bound;
}

bool theorem_predicts_global(const EmdenSpec& spec) {
    if (!(spec.xi < 0.0) || spec.system == SystemKind::P) return false;
    return std::all_of(spec.a1.begin(), spec.a1.end(),
                       [](double v) { return v >= 0.0; });
}

Classification classify(const Trajectory& traj) {
    switch (traj.termination.kind) {
    case TerminationKind::BlowupEvent: return Classification::BlowupDetected;
    case TerminationKind::EscapeEvent: return Classification::GlobalGrowing;
    case TerminationKind::StepFailure: return Classification::Undetermined;
    case TerminationKind::ReachedTEnd: break;
    }
    double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
    for (const PhaseState& s : traj.samples) {
        for (double a : s.a) {
            amin = std::min(amin, a);
            amax = std::max(amax, a);
        }
    }
    const bool bounded =
        amax < traj.cfg.escape_ceiling / 1e3 && amax / amin < 1e6;
    return bounded ? Classification::GlobalBounded
                   : Classification::GlobalGrowing;
}

std::optional<std::vector<double>> first_integral(const EmdenSpec& spec,
                                                  const PhaseState& state) {
    const int n = spec.dimension;
    if (spec.xi == 0.0) return state.adot; // free motion: velocities conserved

    double m = 0.0;
    switch (spec.system) {
    case SystemKind::BTheorem:
        m = n * (spec.theta - 1.0) + 2.0;
        break;
    case SystemKind::BProof:
        // The volume factor drops out at theta = 1; each axis then obeys the
        // m = 2 power law.
        if (spec.theta != 1.0) return std::nullopt;
        m = 2.0;
        break;
    case SystemKind::A:
        if (spec.theta != 1.0 || n != 1) return std::nullopt;
        m = 2.0;
        break;
    case SystemKind::P:
        return std::nullopt; // axes couple through the volume
    }
    if (std::abs(m - 1.0) < 1e-12) return std::nullopt; // logarithmic case

    std::vector<double> integral(n);
    for (int i = 0; i < n; ++i)
        integral[i] = state.adot[i] +
                      spec.xi * std::pow(state.a[i], 1.0 - m) / (1.0 - m);
    return integral;
}

std::optional<double> first_integral_drift(const EmdenSpec& spec,
                                           const Trajectory& traj) {
    const auto ref = first_integral(spec, traj.samples.front());
    if (!ref) return std::nullopt;
    double drift = 0.0;
    for (const PhaseState& s : traj.samples) {
        const auto cur = first_integral(spec, s);
        for (int i = 0; i < spec.dimension; ++i)
            drift = std::max(drift, std::abs((*cur)[i] - (*ref)[i]));
    }
    return drift;
}

LyapunovResult lyapunov_spectrum(const EmdenSpec& spec,
                                 const IntegrationConfig& cfg,
                                 double t_transient, double t_span,
                                 double renorm_dt) {
    spec.validate();
    if (!(t_transient >= 0.0))
        throw ValidationError("lyapunov_spectrum: t_transient must be >= 0");
    if (!(t_span > 0.0) || !(renorm_dt > 0.0))
        throw ValidationError(
            "lyapunov_spectrum: t_span and renorm_dt must be > 0");

    const int n = spec.dimension;
    const int dim = 2 * n;

    // Discard the transient with the plain event-guarded integrator.
    PhaseState z = initial_state(spec);
    if (t_transient > 0.0) {
        IntegrationConfig head_cfg = cfg;
        head_cfg.t_end = t_transient;
        head_cfg.dense_dt = 0.0;
        const Trajectory head = integrate(spec, head_cfg);
        if (head.termination.kind != TerminationKind::ReachedTEnd)
            throw BlowupDuringLyapunov(
                "trajectory left the admissible region during the transient "
                "at t=" +
                std::to_string(head.termination.time));
        z = head.terminal_state();
    }

    // Augmented state: phase point followed by a column-major tangent frame.
    std::vector<double> y(dim + dim * dim, 0.0);
    pack_state(z, std::span<double>(y).first(dim));
    for (int j = 0; j < dim; ++j) y[dim + j * dim + j] = 1.0;

    PhaseState st;
    auto f_aug = [&](double t, std::span<const double> yy,
                     std::span<double> dydt) -> bool {
        if (!rhs_flat(spec, yy.first(dim), dydt.first(dim))) return false;
        st = unpack_state(n, t, yy.first(dim));
        Eigen::MatrixXd jac;
        try {
            jac = jacobian(spec, st);
        } catch (const DomainError&) {
            return false; // differencing stencil left the domain
        }
        Eigen::Map<const Eigen::MatrixXd> frame(yy.data() + dim, dim, dim);
        Eigen::Map<Eigen::MatrixXd> dframe(dydt.data() + dim, dim, dim);
        dframe = jac * frame;
        return true;
    };

    bool left_domain = false;
    auto guard = [&](const detail::DenseStep&, std::span<const double> ynew) {
        for (int i = 0; i < n; ++i)
            if (ynew[i] <= cfg.blowup_floor) {
                left_domain = true;
                return false;
            }
        for (int i = 0; i < dim; ++i)
            if (std::abs(ynew[i]) >= cfg.escape_ceiling) {
                left_domain = true;
                return false;
            }
        return true;
    };

    detail::DriverOpts dopts;
    dopts.rtol = cfg.rtol;
    dopts.atol = cfg.atol;
    dopts.max_steps = cfg.max_steps;

    std::vector<double> lam(dim, 0.0), rate_sum(dim, 0.0),
        rate_sq(dim, 0.0);
    const double t_stop = t_transient + t_span;
    const double t_tol = 1e-12 * std::max(1.0, t_stop);
    double t = t_transient;
    int segments = 0;
    Eigen::MatrixXd orth(dim, dim);
    while (t < t_stop - t_tol) {
        const double t1 = std::min(t + renorm_dt, t_stop);
        const auto res = detail::drive(f_aug, t, t1, y, dopts, guard);
        if (left_domain || res.status != detail::DriveStatus::ReachedEnd)
            throw BlowupDuringLyapunov(
                "trajectory left the admissible region at t=" +
                std::to_string(res.t));

        Eigen::Map<Eigen::MatrixXd> frame(y.data() + dim, dim, dim);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
        orth = qr.householderQ();
        const Eigen::MatrixXd& packed = qr.matrixQR();
        const double seg_len = t1 - t;
        for (int j = 0; j < dim; ++j) {
            if (packed(j, j) < 0.0) orth.col(j) = -orth.col(j);
            const double r = std::max(std::abs(packed(j, j)),
                                      std::numeric_limits<double>::min());
            const double lr = std::log(r);
            lam[j] += lr;
            const double g = lr / seg_len;
            rate_sum[j] += g;
            rate_sq[j] += g * g;
        }
        frame = orth;
        t = t1;
        ++segments;
    }

    std::vector<double> lambda(dim), sigma(dim, 0.0);
    for (int j = 0; j < dim; ++j) lambda[j] = lam[j] / t_span;
    if (segments > 1) {
        for (int j = 0; j < dim; ++j) {
            const double mean = rate_sum[j] / segments;
            const double var = std::max(
                0.0, (rate_sq[j] - segments * mean * mean) / (segments - 1));
            sigma[j] = std::sqrt(var / segments); // standard error of mean
        }
    }

    std::vector<int> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return lambda[a] > lambda[b]; });

    LyapunovResult out;
    out.spectrum.resize(dim);
    out.sigma.resize(dim);
    for (int j = 0; j < dim; ++j) {
        out.spectrum[j] = lambda[order[j]];
        out.sigma[j] = sigma[order[j]];
    }
    out.t_span = t_span;
    out.segments = segments;
    return out;
}

namespace {

double section_value(const Section& sec, std::span<const double> y, int n) {
    if (sec.kind == Section::Kind::ExpansionRate) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += y[n + k] / y[k];
        return s;
    }
    return y[sec.axis] - sec.value;
}

std::vector<double> project_point(const Section& sec,
                                  std::span<const double> y, int n) {
    const int drop = sec.kind == Section::Kind::ExpansionRate ? n : sec.axis;
    std::vector<double> p;
    p.reserve(2 * n - 1);
    for (int i = 0; i < 2 * n; ++i)
        if (i != drop) p.push_back(y[i]);
    return p;
}

} // namespace

PoincareTrace poincare_section(const Trajectory& traj,
                               const Section& section) {
    const int n = traj.spec.dimension;
    if (section.kind == Section::Kind::Coordinate &&
        (section.axis < 0 || section.axis >= n))
        throw ValidationError("poincare_section: section axis out of range");

    PoincareTrace out;
    constexpr int kScan = 8;
    std::vector<double> buf(2 * n);
    for (const detail::DenseStep& seg : traj.steps) {
        for (int j = 0; j < kScan; ++j) {
            const double tlo = seg.t0 + seg.h * j / kScan;
            const double thi = seg.t0 + seg.h * (j + 1) / kScan;
            seg.eval(tlo, buf);
            const double glo = section_value(section, buf, n);
            seg.eval(thi, buf);
            const double ghi = section_value(section, buf, n);
            if (!(glo * ghi < 0.0)) continue;

            const bool downward = glo > 0.0;
            if (section.direction == Section::Direction::Decreasing &&
                !downward)
                continue;
            if (section.direction == Section::Direction::Increasing &&
                downward)
                continue;

            double lo = tlo, hi = thi;
            const double width_tol = 1e-13 * std::max(1.0, std::abs(thi));
            for (int it = 0; it < 200 && hi - lo > width_tol; ++it) {
                const double mid = 0.5 * (lo + hi);
                seg.eval(mid, buf);
                const double gm = section_value(section, buf, n);
                if ((gm > 0.0) == downward)
                    lo = mid;
                else
                    hi = mid;
            }
            const double tc = 0.5 * (lo + hi);
            seg.eval(tc, buf);
            out.times.push_back(tc);
            out.points.push_back(project_point(section, buf, n));
        }
    }
    return out;
}

double recurrence_minimum(const std::vector<std::vector<double>>& points) {
    if (points.size() < 2) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < points[k].size(); ++i) {
            const double d = points[k + 1][i] - points[k][i];
            d2 += d * d;
        }
        best = std::min(best, std::sqrt(d2));
    }
    return best;
}

RunReport analyze(const EmdenSpec& spec, const IntegrationConfig& cfg,
                  const AnalysisOptions& opts) {
    RunReport r;
    r.spec = spec;
    try {
        r.theorem_bound = theorem_bound(spec);
        r.global_predicted = theorem_predicts_global(spec);

        const Trajectory traj = integrate(spec, cfg);
        r.termination = traj.termination;
        r.classification = classify(traj);
        if (r.classification == Classification::BlowupDetected) {
            r.blowup_time = traj.termination.time;
            if (r.theorem_bound)
                r.bound_satisfied =
                    *r.blowup_time <=
                    *r.theorem_bound + 1e-6 * std::max(1.0, *r.theorem_bound);
        }
        r.first_integral_drift = first_integral_drift(spec, traj);

        if (opts.poincare) {
            const Section sec = opts.section.value_or(Section{});
            PoincareTrace trace = poincare_section(traj, sec);
            r.poincare_points = std::move(trace.points);
        }
        r.recurrence_min = recurrence_minimum(r.poincare_points);
        r.periodic_candidate = r.recurrence_min < 1e-4;

        if (opts.lyapunov) {
            try {
                r.lyapunov =
                    lyapunov_spectrum(spec, cfg, opts.lyap_transient,
                                      opts.lyap_span, opts.lyap_renorm_dt);
                r.chaotic_candidate = r.lyapunov->spectrum.front() >
                                      3.0 * r.lyapunov->sigma.front();
            } catch (const BlowupDuringLyapunov&) {
                // Not a failure: the run just is not global for long enough.
            }
        }
    } catch (const std::exception& e) {
        r.classification = Classification::Undetermined;
        r.error = e.what();
    }
    return r;
}

std::vector<RunReport> sweep(const std::vector<EmdenSpec>& grid,
                             const IntegrationConfig& cfg,
                             const AnalysisOptions& opts, int workers) {
    std::vector<RunReport> out(grid.size());
    if (grid.empty()) return out;

    const unsigned hw = std::thread::hardware_concurrency();
    int pool_size = workers > 0 ? workers : (hw > 0 ? static_cast<int>(hw) : 1);
    pool_size = std::min<int>(pool_size, static_cast<int>(grid.size()));

    if (pool_size <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            out[i] = analyze(grid[i], cfg, opts);
        return out;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            out[i] = analyze(grid[i], cfg, opts);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int w = 0; w < pool_size; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    return out;
}

} // namespace elf

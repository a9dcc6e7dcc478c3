#include "elf/artifacts.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace elf {

namespace {

using nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt4g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// JSON cannot carry IEEE specials as numbers; encode them as tag strings.
ordered_json number_or_tag(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0.0 ? "inf" : "-inf";
}

ordered_json config_json(const RunConfig& cfg) {
    ordered_json j = ordered_json::parse(emit_config(cfg));
    // The output directory is runtime routing, not part of what was
    // computed; dropping it keeps artifacts byte-identical wherever the
    // same run is written.
    j["outputs"].erase("dir");
    return j;
}

std::string config_line(const RunConfig& cfg) {
    return config_json(cfg).dump();
}

ordered_json termination_node(const Termination& term) {
    ordered_json o;
    o["kind"] = to_string(term.kind);
    o["time"] = term.time;
    o["component"] = term.component; // -1 when no single axis triggered
    return o;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string spec_hash(const EmdenSpec& spec) {
    const std::string canon = emit_spec(spec);
    std::uint64_t h = 14695981039346656037ULL; // FNV-1a 64-bit
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string trajectory_csv(const RunConfig& cfg, const Trajectory& traj) {
    const int n = cfg.spec.dimension;
    std::string out = "# config=" + config_line(cfg) + "\n";
    out += "t";
    for (int i = 1; i <= n; ++i) out += ",a_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) out += ",adot_" + std::to_string(i);
    out += '\n';
    for (const PhaseState& s : traj.samples) {
        out += fmt17(s.t);
        for (int i = 0; i < n; ++i) out += "," + fmt17(s.a[i]);
        for (int i = 0; i < n; ++i) out += "," + fmt17(s.adot[i]);
        out += '\n';
    }
    return out;
}

std::string termination_json(const RunConfig& cfg, const Trajectory& traj) {
    ordered_json o;
    o["config"] = config_json(cfg);
    o["termination"] = termination_node(traj.termination);
    o["accepted_steps"] = traj.steps.size();
    o["samples"] = traj.samples.size();
    const PhaseState& last = traj.terminal_state();
    ordered_json st;
    st["t"] = last.t;
    st["a"] = last.a;
    st["adot"] = last.adot;
    o["terminal_state"] = st;
    return o.dump(2) + "\n";
}

std::string residual_report_json(const RunConfig& cfg,
                                 const ResidualReport& report) {
    ordered_json o;
    o["config"] = config_json(cfg);
    o["method"] = to_string(report.method);
    o["normalization"] = number_or_tag(report.normalization);
    o["mass_residual_max"] = number_or_tag(report.mass_residual_max);
    ordered_json mom = ordered_json::array();
    for (double v : report.momentum_residual_max) mom.push_back(number_or_tag(v));
    o["momentum_residual_max"] = mom;
    o["worst_momentum"] = number_or_tag(report.worst_momentum());
    o["sample_count"] = report.sample_points.size();
    return o.dump(2) + "\n";
}

std::string run_report_json(const RunConfig& cfg, const RunReport& report) {
    ordered_json o;
    o["config"] = config_json(cfg);
    o["spec_hash"] = spec_hash(report.spec);
    o["classification"] = to_string(report.classification);
    o["termination"] = termination_node(report.termination);
    o["blowup_time"] =
        report.blowup_time ? ordered_json(*report.blowup_time) : nullptr;
    o["theorem_bound"] =
        report.theorem_bound ? ordered_json(*report.theorem_bound) : nullptr;
    o["bound_satisfied"] = report.bound_satisfied
                               ? ordered_json(*report.bound_satisfied)
                               : nullptr;
    o["global_predicted"] = report.global_predicted;
    o["first_integral_drift"] =
        report.first_integral_drift
            ? ordered_json(number_or_tag(*report.first_integral_drift))
            : nullptr;
    if (report.lyapunov) {
        ordered_json lyap;
        lyap["spectrum"] = report.lyapunov->spectrum;
        lyap["sigma"] = report.lyapunov->sigma;
        lyap["t_span"] = report.lyapunov->t_span;
        lyap["segments"] = report.lyapunov->segments;
        o["lyapunov"] = lyap;
    } else {
        o["lyapunov"] = nullptr;
    }
    o["chaotic_candidate"] = report.chaotic_candidate;
    o["recurrence_min"] = number_or_tag(report.recurrence_min);
    o["periodic_candidate"] = report.periodic_candidate;
    o["poincare_count"] = report.poincare_points.size();
    o["poincare_points"] = report.poincare_points;
    o["error"] = report.error;
    return o.dump(2) + "\n";
}

std::string lyapunov_json(const RunConfig& cfg, const LyapunovResult& result) {
    ordered_json o;
    o["config"] = config_json(cfg);
    o["spectrum"] = result.spectrum;
    o["sigma"] = result.sigma;
    o["t_span"] = result.t_span;
    o["segments"] = result.segments;
    o["chaotic_candidate"] =
        !result.spectrum.empty() &&
        result.spectrum.front() > 3.0 * result.sigma.front();
    return o.dump(2) + "\n";
}

std::string mass_json(const RunConfig& cfg, const std::vector<double>& times,
                      const std::vector<double>& masses) {
    ordered_json o;
    o["config"] = config_json(cfg);
    o["times"] = times;
    ordered_json vals = ordered_json::array();
    bool finite = true;
    for (double m : masses) {
        vals.push_back(number_or_tag(m));
        finite = finite && std::isfinite(m);
    }
    o["masses"] = vals;
    o["finite"] = finite;
    return o.dump(2) + "\n";
}

std::string sweep_csv(const IntegrationConfig& integration,
                      const std::vector<RunReport>& reports) {
    ordered_json ic;
    ic["t_end"] = integration.t_end;
    ic["rtol"] = integration.rtol;
    ic["atol"] = integration.atol;
    ic["blowup_floor"] = integration.blowup_floor;
    ic["escape_ceiling"] = integration.escape_ceiling;
    ic["max_steps"] = integration.max_steps;
    ic["dense_dt"] = integration.dense_dt;

    std::string out = "# config=" + ic.dump() + "\n";
    out += "spec_hash,system,N,theta,xi,kappa1,kappa2,alpha,classification,"
           "blowup_time,theorem_bound,bound_satisfied,global_predicted,"
           "lambda1,first_integral_drift,recurrence_min,periodic_candidate,"
           "chaotic_candidate,error\n";
    for (const RunReport& r : reports) {
        out += spec_hash(r.spec);
        out += ",";
        out += to_string(r.spec.system);
        out += "," + std::to_string(r.spec.dimension);
        out += "," + fmt17(r.spec.theta);
        out += "," + fmt17(r.spec.xi);
        out += "," + fmt17(r.spec.kappa1);
        out += "," + fmt17(r.spec.kappa2);
        out += "," + fmt17(r.spec.alpha);
        out += ",";
        out += to_string(r.classification);
        out += ",";
        if (r.blowup_time) out += fmt17(*r.blowup_time);
        out += ",";
        if (r.theorem_bound) out += fmt17(*r.theorem_bound);
        out += ",";
        if (r.bound_satisfied) out += *r.bound_satisfied ? "true" : "false";
        out += ",";
        out += r.global_predicted ? "true" : "false";
        out += ",";
        if (r.lyapunov && !r.lyapunov->spectrum.empty())
            out += fmt17(r.lyapunov->spectrum.front());
        out += ",";
        if (r.first_integral_drift) out += fmt17(*r.first_integral_drift);
        out += ",";
        if (std::isfinite(r.recurrence_min)) out += fmt17(r.recurrence_min);
        out += ",";
        out += r.periodic_candidate ? "true" : "false";
        out += ",";
        out += r.chaotic_candidate ? "true" : "false";
        out += ",";
        if (!r.error.empty()) out += csv_quote(r.error);
        out += '\n';
    }
    return out;
}

std::string trajectory_svg(const RunConfig& cfg, const Trajectory& traj) {
    const int n = cfg.spec.dimension;
    const bool logscale = cfg.outputs.log_scale;
    static const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c",
                                     "#8338ec", "#ff8c42", "#00a6a6",
                                     "#aa3355", "#666b2f"};
    constexpr int kPaletteSize = 8;

    const double width = 860.0, height = 520.0;
    const double left = 70.0, right = width - 190.0;
    const double top = 44.0, bottom = height - 56.0;

    const double tmax = std::max(traj.terminal_time(), 1e-300);
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const PhaseState& s : traj.samples) {
        for (double a : s.a) {
            const double v = logscale ? std::log10(a) : a;
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    double pad = 0.05 * (ymax - ymin);
    if (!(pad > 0.0)) pad = 1.0;
    ymin -= pad;
    ymax += pad;

    auto sx = [&](double t) { return left + t / tmax * (right - left); };
    auto sy = [&](double v) {
        return bottom - (v - ymin) / (ymax - ymin) * (bottom - top);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" "
           "height=\"520\" viewBox=\"0 0 860 520\">\n";
    svg += "  <desc>config=" + xml_escape(config_line(cfg)) + "</desc>\n";
    svg += "  <rect width=\"860\" height=\"520\" fill=\"#ffffff\"/>\n";

    // Title: the run in one line.
    svg += "  <text x=\"" + fmt2((left + right) / 2) +
           "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
           "text-anchor=\"middle\" fill=\"#222222\">system " +
           to_string(cfg.spec.system) + ", N=" + std::to_string(n) +
           ", theta=" + fmt4g(cfg.spec.theta) + ", xi=" + fmt4g(cfg.spec.xi) +
           "</text>\n";

    // Grid and ticks.
    for (int k = 0; k <= 4; ++k) {
        const double tv = tmax * k / 4.0;
        const double x = sx(tv);
        svg += "  <line x1=\"" + fmt2(x) + "\" y1=\"" + fmt2(top) +
               "\" x2=\"" + fmt2(x) + "\" y2=\"" + fmt2(bottom) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + fmt2(x) + "\" y=\"" + fmt2(bottom + 18) +
               "\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"middle\" fill=\"#444444\">" +
               fmt4g(tv) + "</text>\n";

        const double yv = ymin + (ymax - ymin) * k / 4.0;
        const double y = sy(yv);
        svg += "  <line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(y) +
               "\" x2=\"" + fmt2(right) + "\" y2=\"" + fmt2(y) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + fmt2(left - 8) + "\" y=\"" + fmt2(y + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"end\" fill=\"#444444\">" +
               fmt4g(yv) + "</text>\n";
    }

    // Axes on top of the grid.
    svg += "  <line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(top) + "\" x2=\"" +
           fmt2(left) + "\" y2=\"" + fmt2(bottom) +
           "\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n";
    svg += "  <line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(bottom) +
           "\" x2=\"" + fmt2(right) + "\" y2=\"" + fmt2(bottom) +
           "\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n";
    svg += "  <text x=\"" + fmt2((left + right) / 2) + "\" y=\"" +
           fmt2(height - 14) +
           "\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"middle\" fill=\"#222222\">t</text>\n";
    svg += std::string("  <text x=\"14\" y=\"") + fmt2(top - 12) +
           "\" font-family=\"sans-serif\" font-size=\"13\" "
           "fill=\"#222222\">" +
           (logscale ? "log10 a_i(t)" : "a_i(t)") + "</text>\n";

    // One polyline per scaling factor, plus a legend entry.
    for (int i = 0; i < n; ++i) {
        const char* color = kPalette[i % kPaletteSize];
        std::string pts;
        for (const PhaseState& s : traj.samples) {
            const double v = logscale ? std::log10(s.a[i]) : s.a[i];
            pts += fmt2(sx(s.t)) + "," + fmt2(sy(v)) + " ";
        }
        svg += "  <polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.6\" points=\"" + pts + "\"/>\n";

        const double ly = top + 10 + 20.0 * i;
        svg += "  <line x1=\"" + fmt2(right + 14) + "\" y1=\"" + fmt2(ly) +
               "\" x2=\"" + fmt2(right + 42) + "\" y2=\"" + fmt2(ly) +
               "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\"/>\n";
        svg += "  <text x=\"" + fmt2(right + 48) + "\" y=\"" + fmt2(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\" "
               "fill=\"#222222\">a_" +
               std::to_string(i + 1) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace elf

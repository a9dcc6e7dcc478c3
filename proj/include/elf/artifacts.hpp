#pragma once

#include <string>
#include <vector>

#include "elf/config.hpp"
#include "elf/dynamics.hpp"
#include "elf/verify.hpp"

// Artifact emission: CSV tables, JSON reports, and static SVG line plots.
// Every artifact embeds the configuration that produced it (a `# config=`
// header line in CSVs, a "config" field in JSON, a <desc> block in SVG), so
// any output can be reproduced from the artifact alone.  Floats are printed
// with 17 significant digits; identical configs yield byte-identical files.

namespace elf {

// 16-hex-digit FNV-1a hash of the canonical spec JSON (sweep row identity).
std::string spec_hash(const EmdenSpec& spec);

void write_text_file(const std::string& path, const std::string& text);

// Columns: t, a_1..a_N, adot_1..adot_N over the trajectory's sample grid.
std::string trajectory_csv(const RunConfig& cfg, const Trajectory& traj);

// Why the run stopped, plus step/sample counts.
std::string termination_json(const RunConfig& cfg, const Trajectory& traj);

std::string residual_report_json(const RunConfig& cfg,
                                 const ResidualReport& report);

std::string run_report_json(const RunConfig& cfg, const RunReport& report);

std::string lyapunov_json(const RunConfig& cfg, const LyapunovResult& result);

std::string mass_json(const RunConfig& cfg, const std::vector<double>& times,
                      const std::vector<double>& masses);

// One row per swept spec: identity, parameters, classification, bound
// checks, leading exponent, drift, recurrence, and any per-run error.
std::string sweep_csv(const IntegrationConfig& integration,
                      const std::vector<RunReport>& reports);

// Static line plot of the scaling factors over time (optional log10 axis).
std::string trajectory_svg(const RunConfig& cfg, const Trajectory& traj);

} // namespace elf

#pragma once

#include <string>
#include <vector>

#include "elf/integrator.hpp"
#include "elf/model.hpp"

// JSON run configuration: one spec plus integration settings plus output
// options.  Parsing is strict (unknown keys rejected, every error carries a
// $.field path); emission is canonical (stable key order) so that
// parse_config(emit_config(c)) == c for every valid c.

namespace elf {

struct OutputOptions {
    std::string dir = ".";
    bool plot = false;      // also write an SVG of the scaling factors
    bool log_scale = false; // log10 vertical axis in the plot
    int verify_samples = 10; // residual samples per time slice
    int verify_slices = 10;  // time slices for residual reports
    double support_margin = 1e-3;
    bool fd = false;   // verify with the finite-difference oracle
    double fd_h = 1e-3;
    bool lyapunov = false; // attach a Lyapunov spectrum to classify runs
    double lyap_transient = 20.0;
    double lyap_span = 500.0;
    double lyap_renorm_dt = 0.5;
    std::vector<double> mass_times; // sample times for the mass subcommand

    bool operator==(const OutputOptions&) const = default;
};

struct RunConfig {
    EmdenSpec spec;
    IntegrationConfig integration;
    OutputOptions outputs;

    bool operator==(const RunConfig&) const = default;
};

// Parses and validates a config document.  SchemaError pinpoints structural
// problems (missing/unknown/ill-typed fields); ValidationError surfaces
// invariant violations from the underlying types.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical JSON emission; round-trips through parse_config.
std::string emit_config(const RunConfig& cfg);

// Canonical one-line JSON for a spec alone (artifact provenance, hashing).
std::string emit_spec(const EmdenSpec& spec);

// A sweep document: shared integration/output settings plus a "runs" array
// of spec objects, evaluated in order.
struct SweepConfig {
    std::vector<EmdenSpec> runs;
    IntegrationConfig integration;
    OutputOptions outputs;
};

SweepConfig parse_sweep_config(const std::string& text);
SweepConfig parse_sweep_config_file(const std::string& path);

// The built-in exploration grid: systems A and BProof over
// theta in {0.5, 1, 2}, N in {2, 3}, xi in {-2, -1, 1, 2}, with fixed
// anisotropic initial data (includes the finite-mass xi > 0 cases).
std::vector<EmdenSpec> default_sweep_grid();

} // namespace elf

// elf: a numerical laboratory for anisotropic scaling dynamics.
//
// Subcommands integrate the scale-factor systems, reconstruct the exact
// self-similar density/velocity fields, check them against the fluid
// equations by direct residual evaluation, classify long-time behaviour,
// and probe for periodic or chaotic regimes.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "elf/artifacts.hpp"
#include "elf/config.hpp"
#include "elf/dynamics.hpp"
#include "elf/errors.hpp"
#include "elf/fields.hpp"
#include "elf/integrator.hpp"
#include "elf/verify.hpp"

namespace fs = std::filesystem;

namespace {

struct CliState {
    std::string config_path;
    std::string outdir_override;
    int workers = 0;
    bool fd = false;
    bool default_grid = false;
};

int resolve_workers(int cli_workers) {
    if (cli_workers > 0) return cli_workers;
    if (const char* env = std::getenv("ELF_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0; // sweep() falls back to the hardware concurrency
}

fs::path ensure_outdir(const elf::OutputOptions& outputs,
                       const std::string& override_dir) {
    fs::path dir = override_dir.empty() ? fs::path(outputs.dir)
                                        : fs::path(override_dir);
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::exists(dir))
        throw std::runtime_error("cannot create output directory: " +
                                 dir.string());
    return dir;
}

elf::RunConfig load_run_config(const CliState& cli) {
    elf::RunConfig rc = elf::parse_config_file(cli.config_path);
    if (!cli.outdir_override.empty()) rc.outputs.dir = cli.outdir_override;
    return rc;
}

int run_simulate(const CliState& cli) {
    const elf::RunConfig rc = load_run_config(cli);
    const elf::Trajectory traj = elf::integrate(rc.spec, rc.integration);
    const fs::path dir = ensure_outdir(rc.outputs, "");

    const fs::path csv = dir / "trajectory.csv";
    elf::write_text_file(csv.string(), elf::trajectory_csv(rc, traj));
    const fs::path tj = dir / "termination.json";
    elf::write_text_file(tj.string(), elf::termination_json(rc, traj));
    std::cout << "wrote " << csv.string() << "\n";
    std::cout << "wrote " << tj.string() << "\n";
    if (rc.outputs.plot) {
        const fs::path svg = dir / "trajectory.svg";
        elf::write_text_file(svg.string(), elf::trajectory_svg(rc, traj));
        std::cout << "wrote " << svg.string() << "\n";
    }

    std::cout << "termination: " << elf::to_string(traj.termination.kind)
              << " at t=" << traj.termination.time << "\n";
    return traj.termination.kind == elf::TerminationKind::StepFailure ? 2 : 0;
}

int run_verify(const CliState& cli) {
    const elf::RunConfig rc = load_run_config(cli);
    const elf::Profile profile = elf::make_profile(rc.spec);
    const elf::Trajectory traj = elf::integrate(rc.spec, rc.integration);

    elf::VerifyOptions opts;
    opts.samples_per_slice = rc.outputs.verify_samples;
    opts.time_slices = rc.outputs.verify_slices;
    opts.support_margin = rc.outputs.support_margin;
    opts.fd_h = rc.outputs.fd_h;
    const elf::ResidualMethod method =
        cli.fd || rc.outputs.fd ? elf::ResidualMethod::FiniteDifference
                                : elf::ResidualMethod::Analytic;

    const elf::ResidualReport report =
        elf::residual_report(rc.spec, profile, traj, method, opts);

    const fs::path dir = ensure_outdir(rc.outputs, "");
    const fs::path out = dir / "residuals.json";
    elf::write_text_file(out.string(), elf::residual_report_json(rc, report));
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "method: " << elf::to_string(report.method) << "\n";
    std::cout << "mass residual (normalized):     " << report.mass_residual_max
              << "\n";
    std::cout << "momentum residual (normalized): " << report.worst_momentum()
              << "\n";
    return traj.termination.kind == elf::TerminationKind::StepFailure ? 2 : 0;
}

int run_classify(const CliState& cli) {
    const elf::RunConfig rc = load_run_config(cli);
    elf::AnalysisOptions opts;
    opts.lyapunov = rc.outputs.lyapunov;
    opts.lyap_transient = rc.outputs.lyap_transient;
    opts.lyap_span = rc.outputs.lyap_span;
    opts.lyap_renorm_dt = rc.outputs.lyap_renorm_dt;

    const elf::RunReport report = elf::analyze(rc.spec, rc.integration, opts);

    const fs::path dir = ensure_outdir(rc.outputs, "");
    const fs::path out = dir / "run_report.json";
    elf::write_text_file(out.string(), elf::run_report_json(rc, report));
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "classification: " << elf::to_string(report.classification)
              << "\n";
    if (report.blowup_time)
        std::cout << "blowup time: " << *report.blowup_time << "\n";
    if (report.theorem_bound)
        std::cout << "guaranteed bound: " << *report.theorem_bound << "\n";
    if (!report.error.empty())
        std::cerr << "run error: " << report.error << "\n";
    return report.classification == elf::Classification::Undetermined ? 2 : 0;
}

int run_sweep(const CliState& cli) {
    elf::SweepConfig sc;
    if (cli.default_grid) {
        sc.runs = elf::default_sweep_grid();
        sc.integration.t_end = 20.0;
    } else if (!cli.config_path.empty()) {
        sc = elf::parse_sweep_config_file(cli.config_path);
    } else {
        std::cerr << "sweep needs --config or --default-grid\n";
        return 1;
    }
    if (!cli.outdir_override.empty()) sc.outputs.dir = cli.outdir_override;

    elf::AnalysisOptions opts;
    opts.lyapunov = sc.outputs.lyapunov;
    opts.lyap_transient = sc.outputs.lyap_transient;
    opts.lyap_span = sc.outputs.lyap_span;
    opts.lyap_renorm_dt = sc.outputs.lyap_renorm_dt;

    const std::vector<elf::RunReport> reports =
        elf::sweep(sc.runs, sc.integration, opts, resolve_workers(cli.workers));

    const fs::path dir = ensure_outdir(sc.outputs, "");
    const fs::path out = dir / "sweep.csv";
    elf::write_text_file(out.string(), elf::sweep_csv(sc.integration, reports));
    std::cout << "wrote " << out.string() << "\n";

    int blowup = 0, bounded = 0, growing = 0, undetermined = 0;
    for (const elf::RunReport& r : reports) {
        switch (r.classification) {
        case elf::Classification::BlowupDetected: ++blowup; break;
        case elf::Classification::GlobalBounded: ++bounded; break;
        case elf::Classification::GlobalGrowing: ++growing; break;
        case elf::Classification::Undetermined: ++undetermined; break;
        }
    }
    std::cout << reports.size() << " runs: " << blowup << " blowup, "
              << bounded << " bounded, " << growing << " growing, "
              << undetermined << " undetermined\n";
    return 0;
}

int run_lyapunov(const CliState& cli) {
    const elf::RunConfig rc = load_run_config(cli);
    const elf::LyapunovResult result = elf::lyapunov_spectrum(
        rc.spec, rc.integration, rc.outputs.lyap_transient,
        rc.outputs.lyap_span, rc.outputs.lyap_renorm_dt);

    const fs::path dir = ensure_outdir(rc.outputs, "");
    const fs::path out = dir / "lyapunov.json";
    elf::write_text_file(out.string(), elf::lyapunov_json(rc, result));
    std::cout << "wrote " << out.string() << "\n";
    std::cout << "spectrum:";
    for (double v : result.spectrum) std::cout << " " << v;
    std::cout << "\n";
    return 0;
}

int run_mass(const CliState& cli) {
    const elf::RunConfig rc = load_run_config(cli);
    const elf::Profile profile = elf::make_profile(rc.spec);
    const elf::Trajectory traj = elf::integrate(rc.spec, rc.integration);

    std::vector<double> times = rc.outputs.mass_times;
    if (times.empty())
        times = {0.0, 0.5 * traj.terminal_time(), traj.terminal_time()};

    std::vector<double> masses;
    masses.reserve(times.size());
    for (double t : times)
        masses.push_back(
            elf::total_mass(rc.spec, profile, elf::dense_eval(traj, t)));

    const fs::path dir = ensure_outdir(rc.outputs, "");
    const fs::path out = dir / "mass.json";
    elf::write_text_file(out.string(), elf::mass_json(rc, times, masses));
    std::cout << "wrote " << out.string() << "\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        std::cout << "t=" << times[i] << "  mass=" << masses[i] << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for anisotropic scaling dynamics"};
    app.require_subcommand(1);

    CliState cli;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("-c,--config", cli.config_path,
                                    "JSON configuration file");
        if (config_required) opt->required();
        sub->add_option("-o,--out", cli.outdir_override,
                        "output directory (overrides outputs.dir)");
    };

    CLI::App* simulate = app.add_subcommand(
        "simulate", "integrate the scale dynamics, write CSV/JSON artifacts");
    add_common(simulate, true);

    CLI::App* verify = app.add_subcommand(
        "verify", "evaluate fluid-equation residuals of the exact solution");
    add_common(verify, true);
    verify->add_flag("--fd", cli.fd,
                     "use the finite-difference oracle instead of the "
                     "analytic residuals");

    CLI::App* classify = app.add_subcommand(
        "classify", "classify long-time behaviour, check the blowup bound");
    add_common(classify, true);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "analyze a grid of parameter sets, write a summary CSV");
    add_common(sweep, false);
    sweep->add_flag("--default-grid", cli.default_grid,
                    "use the built-in exploration grid");
    sweep->add_option("--workers", cli.workers,
                      "worker pool size (default: ELF_WORKERS, then all "
                      "logical CPUs)");

    CLI::App* lyapunov = app.add_subcommand(
        "lyapunov", "estimate the Lyapunov spectrum along a global run");
    add_common(lyapunov, true);

    CLI::App* mass = app.add_subcommand(
        "mass", "total integrated density at selected times");
    add_common(mass, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(cli);
        if (verify->parsed()) return run_verify(cli);
        if (classify->parsed()) return run_classify(cli);
        if (sweep->parsed()) return run_sweep(cli);
        if (lyapunov->parsed()) return run_lyapunov(cli);
        if (mass->parsed()) return run_mass(cli);
    } catch (const elf::BlowupDuringLyapunov& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const elf::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const elf::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

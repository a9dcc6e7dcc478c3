#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

// End-to-end checks of the installed binary (path injected by the build).
#ifndef ELF_BIN_PATH
#error "ELF_BIN_PATH must point at the elf executable"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Fresh scratch directory per test case, removed on destruction.
struct Workspace {
    fs::path dir;
    Workspace() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("elf_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter++));
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    fs::path write_json(const std::string& name, const json& doc) const {
        const fs::path p = dir / name;
        std::ofstream out(p);
        out << doc.dump(2);
        return p;
    }

    CliResult run(const std::string& args, const std::string& env = "") const {
        const fs::path log = dir / "stdout.log";
        std::string cmd = env;
        if (!env.empty()) cmd += " ";
        cmd += std::string("\"") + ELF_BIN_PATH + "\" " + args + " > " +
               log.string() + " 2> " + (dir / "stderr.log").string();
        const int raw = std::system(cmd.c_str());
        CliResult r;
        r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(log);
        return r;
    }
};

json base_spec() {
    return json{{"system", "A"}, {"N", 2},           {"theta", 1.0},
                {"xi", 1.0},     {"kappa1", 1.0},    {"kappa2", 0.0},
                {"alpha", 1.0},  {"a0", {1.0, 1.0}}, {"a1", {0.0, 0.0}},
                {"t_end", 1.0}};
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("simulate writes an exact trajectory for free motion") {
    Workspace ws;
    json doc = base_spec();
    doc["xi"] = 0.0;
    doc["a1"] = {3.0, 0.0};
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("simulate -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("termination: ReachedTEnd") != std::string::npos);

    const std::string csv = slurp(ws.dir / "out" / "trajectory.csv");
    REQUIRE(!csv.empty());
    CHECK(csv.rfind("# config=", 0) == 0); // provenance comes first
    const auto rows = csv_rows(csv);
    REQUIRE(!rows.empty());
    const auto& last = rows.back();
    REQUIRE(last.size() == 5);
    CHECK(last[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(last[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(last[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(last[3] == doctest::Approx(3.0).epsilon(1e-12));

    const std::string tj = slurp(ws.dir / "out" / "termination.json");
    const json parsed = json::parse(tj);
    CHECK(parsed["termination"]["kind"] == "ReachedTEnd");
    CHECK(parsed["config"]["xi"] == 0.0);
}

TEST_CASE("repeated runs produce byte-identical artifacts") {
    Workspace ws;
    json doc = base_spec();
    doc["xi"] = -1.0;
    doc["a1"] = {-1.0, -0.5};
    doc["t_end"] = 5.0;
    const fs::path cfg = ws.write_json("run.json", doc);

    CHECK(ws.run("simulate -c " + cfg.string() + " -o " +
                 (ws.dir / "one").string())
              .exit_code == 0);
    CHECK(ws.run("simulate -c " + cfg.string() + " -o " +
                 (ws.dir / "two").string())
              .exit_code == 0);
    const std::string a = slurp(ws.dir / "one" / "trajectory.csv");
    const std::string b = slurp(ws.dir / "two" / "trajectory.csv");
    REQUIRE(!a.empty());
    CHECK(a == b);
}

TEST_CASE("the optional plot is a standalone SVG") {
    Workspace ws;
    json doc = base_spec();
    doc["outputs"] = {{"plot", true}};
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("simulate -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    const std::string svg = slurp(ws.dir / "out" / "trajectory.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("config=") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("classify reports the verdict and checks the bound") {
    Workspace ws;
    json doc = base_spec();
    doc["xi"] = -1.0;
    doc["a1"] = {-1.0, -0.5};
    doc["t_end"] = 5.0;
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("classify -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("classification: blowup_detected") != std::string::npos);
    CHECK(r.out.find("guaranteed bound: 1") != std::string::npos);

    const json rep = json::parse(slurp(ws.dir / "out" / "run_report.json"));
    CHECK(rep["classification"] == "blowup_detected");
    CHECK(rep["bound_satisfied"] == true);
    CHECK(rep["blowup_time"].get<double>() <= 1.0 + 1e-6);
    CHECK(rep["error"] == "");
}

TEST_CASE("verify writes residuals at rounding level for an exact fit") {
    Workspace ws;
    json doc = base_spec();
    doc["a1"] = {0.15, -0.1};
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("verify -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    const json rep = json::parse(slurp(ws.dir / "out" / "residuals.json"));
    CHECK(rep["method"] == "analytic");
    CHECK(rep["mass_residual_max"].get<double>() < 1e-9);
    CHECK(rep["worst_momentum"].get<double>() < 1e-9);

    const CliResult rfd = ws.run("verify --fd -c " + cfg.string() + " -o " +
                                 (ws.dir / "fd").string());
    CHECK(rfd.exit_code == 0);
    const json fd = json::parse(slurp(ws.dir / "fd" / "residuals.json"));
    CHECK(fd["method"] == "finite_difference");
    CHECK(fd["worst_momentum"].get<double>() < 1e-5);
}

TEST_CASE("mass reproduces the closed-form Gaussian integral") {
    Workspace ws;
    json doc = base_spec();
    doc["N"] = 1;
    doc["xi"] = 2.0;
    doc["a0"] = {1.0};
    doc["a1"] = {0.0};
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("mass -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("mass=") != std::string::npos);
    const json rep = json::parse(slurp(ws.dir / "out" / "mass.json"));
    CHECK(rep["finite"] == true);
    REQUIRE(rep["masses"].size() == 3);
    for (const auto& m : rep["masses"])
        CHECK(m.get<double>() ==
              doctest::Approx(std::sqrt(3.14159265358979324)).epsilon(1e-6));
}

TEST_CASE("lyapunov writes the spectrum of a short quiet run") {
    Workspace ws;
    json doc = base_spec();
    doc["xi"] = 0.0;
    doc["a1"] = {0.3, 0.1};
    doc["outputs"] = {{"lyap_transient", 0.5},
                      {"lyap_span", 5.0},
                      {"lyap_renorm_dt", 0.5}};
    const fs::path cfg = ws.write_json("run.json", doc);

    const CliResult r = ws.run("lyapunov -c " + cfg.string() + " -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("spectrum:") != std::string::npos);
    const json rep = json::parse(slurp(ws.dir / "out" / "lyapunov.json"));
    CHECK(rep["spectrum"].size() == 4);
    CHECK(rep["segments"] == 10);
}

TEST_CASE("failures map to distinct exit codes") {
    Workspace ws;
    SUBCASE("schema problem") {
        json doc = base_spec();
        doc["bogus"] = 1;
        const fs::path cfg = ws.write_json("run.json", doc);
        CHECK(ws.run("simulate -c " + cfg.string()).exit_code == 1);
    }
    SUBCASE("invariant violation") {
        json doc = base_spec();
        doc["a0"] = {1.0, -1.0};
        const fs::path cfg = ws.write_json("run.json", doc);
        CHECK(ws.run("simulate -c " + cfg.string()).exit_code == 1);
    }
    SUBCASE("missing config file") {
        CHECK(ws.run("simulate -c " + (ws.dir / "absent.json").string())
                  .exit_code == 1);
    }
    SUBCASE("integrator gave up") {
        json doc = base_spec();
        doc["xi"] = -1.0;
        doc["a1"] = {-1.0, -0.5};
        doc["t_end"] = 5.0;
        doc["max_steps"] = 3;
        const fs::path cfg = ws.write_json("run.json", doc);
        CHECK(ws.run("simulate -c " + cfg.string() + " -o " +
                     (ws.dir / "out").string())
                  .exit_code == 2);
        CHECK(ws.run("classify -c " + cfg.string() + " -o " +
                     (ws.dir / "out").string())
                  .exit_code == 2);
    }
    SUBCASE("sweep without inputs") {
        CHECK(ws.run("sweep").exit_code == 1);
    }
}

TEST_CASE("sweep summarizes a small grid deterministically") {
    Workspace ws;
    json run_blow = base_spec();
    run_blow.erase("t_end");
    run_blow["xi"] = -1.0;
    run_blow["a1"] = {-1.0, -0.5};
    json run_flat = base_spec();
    run_flat.erase("t_end");
    run_flat["xi"] = -1.0;
    json run_grow = base_spec();
    run_grow.erase("t_end");
    run_grow["xi"] = 0.0;
    run_grow["a1"] = {2e6, 0.0}; // reaches a ratio of 1e7 by t_end = 5

    json doc;
    doc["t_end"] = 5.0;
    doc["runs"] = {run_blow, run_flat, run_grow};
    const fs::path cfg = ws.write_json("sweep.json", doc);

    const CliResult r = ws.run("sweep -c " + cfg.string() + " -o " +
                               (ws.dir / "one").string() + " --workers 1");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("3 runs: 1 blowup, 1 bounded, 1 growing, 0 undetermined") !=
          std::string::npos);

    const std::string csv = slurp(ws.dir / "one" / "sweep.csv");
    REQUIRE(!csv.empty());
    CHECK(csv.rfind("# config=", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 5); // provenance + header + one row per run

    // A different worker count, picked up from the environment, cannot
    // change a single byte of the summary.
    const CliResult r2 = ws.run("sweep -c " + cfg.string() + " -o " +
                                    (ws.dir / "two").string(),
                                "ELF_WORKERS=2");
    CHECK(r2.exit_code == 0);
    CHECK(slurp(ws.dir / "two" / "sweep.csv") == csv);
}

TEST_CASE("the built-in grid runs end to end") {
    Workspace ws;
    const CliResult r = ws.run("sweep --default-grid -o " +
                               (ws.dir / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("48 runs:") != std::string::npos);
    CHECK(r.out.find(" 0 undetermined") != std::string::npos);
    const std::string csv = slurp(ws.dir / "out" / "sweep.csv");
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 50);
}

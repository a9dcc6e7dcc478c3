#include "elf/config.hpp"

#include <fstream>
#include <string_view>
#include <sstream>

#include "json.hpp"

#include "elf/errors.hpp"

namespace elf {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class Keys>
void check_keys(const json& obj, const Keys& allowed,
                const std::string& path) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (std::string_view k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw SchemaError(path + "." + item.key(), "unknown field");
    }
}

const json& require(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(path + "." + key, "missing required field");
    return *it;
}

double get_num(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number())
        throw SchemaError(path + "." + key, "expected a number");
    return v.get<double>();
}

double get_num_or(const json& obj, const char* key, double fallback,
                  const std::string& path) {
    if (!obj.contains(key)) return fallback;
    return get_num(obj, key, path);
}

long get_integer(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number_integer())
        throw SchemaError(path + "." + key, "expected an integer");
    return v.get<long>();
}

bool get_bool_or(const json& obj, const char* key, bool fallback,
                 const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean())
        throw SchemaError(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::string get_str(const json& obj, const char* key,
                    const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string())
        throw SchemaError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_vec(const json& obj, const char* key, int expected,
                            const std::string& path) {
    const json& v = require(obj, key, path);
    const std::string vpath = path + "." + key;
    if (!v.is_array())
        throw SchemaError(vpath, "expected an array of N numbers");
    if (expected >= 0 && static_cast<int>(v.size()) != expected)
        throw SchemaError(vpath, "expected exactly " +
                                     std::to_string(expected) + " entries");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw SchemaError(vpath + "[" + std::to_string(i) + "]",
                              "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

constexpr std::string_view kSpecKeys[] = {
    "system", "N", "theta", "xi", "kappa1", "kappa2", "alpha",
    "d",      "a0", "a1"};

constexpr std::string_view kIntegrationKeys[] = {
    "t_end",          "rtol",      "atol",    "blowup_floor",
    "escape_ceiling", "max_steps", "dense_dt"};

constexpr std::string_view kOutputKeys[] = {
    "dir",        "plot",          "log_scale", "verify_samples",
    "verify_slices", "support_margin", "fd",       "fd_h",
    "lyapunov",   "lyap_transient", "lyap_span", "lyap_renorm_dt",
    "mass_times"};

// Spec fields shared by single-run configs and sweep "runs" entries.
EmdenSpec parse_spec_fields(const json& obj, const std::string& path) {
    EmdenSpec spec;
    const std::string name = get_str(obj, "system", path);
    try {
        spec.system = system_from_string(name);
    } catch (const ValidationError&) {
        throw SchemaError(path + ".system",
                          "unknown system \"" + name +
                              "\" (expected A, BProof, BTheorem, or P)");
    }
    const long n = get_integer(obj, "N", path);
    if (n < 1) throw SchemaError(path + ".N", "must be >= 1");
    spec.dimension = static_cast<int>(n);
    spec.theta = get_num(obj, "theta", path);
    spec.xi = get_num(obj, "xi", path);
    spec.kappa1 = get_num(obj, "kappa1", path);
    spec.kappa2 = get_num(obj, "kappa2", path);
    spec.alpha = get_num(obj, "alpha", path);
    spec.drifts = obj.contains("d") ? get_vec(obj, "d", spec.dimension, path)
                                    : std::vector<double>(spec.dimension, 0.0);
    spec.a0 = get_vec(obj, "a0", spec.dimension, path);
    spec.a1 = get_vec(obj, "a1", spec.dimension, path);
    return spec;
}

void parse_integration_fields(const json& obj, const std::string& path,
                              IntegrationConfig& cfg) {
    cfg.t_end = get_num(obj, "t_end", path);
    cfg.rtol = get_num_or(obj, "rtol", cfg.rtol, path);
    cfg.atol = get_num_or(obj, "atol", cfg.atol, path);
    cfg.blowup_floor = get_num_or(obj, "blowup_floor", cfg.blowup_floor, path);
    cfg.escape_ceiling =
        get_num_or(obj, "escape_ceiling", cfg.escape_ceiling, path);
    if (obj.contains("max_steps"))
        cfg.max_steps = get_integer(obj, "max_steps", path);
    cfg.dense_dt = get_num_or(obj, "dense_dt", cfg.dense_dt, path);
}

OutputOptions parse_output_fields(const json& parent,
                                  const std::string& parent_path) {
    OutputOptions out;
    if (!parent.contains("outputs")) return out;
    const json& obj = parent.at("outputs");
    const std::string path = parent_path + ".outputs";
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    check_keys(obj, kOutputKeys, path);
    if (obj.contains("dir")) out.dir = get_str(obj, "dir", path);
    out.plot = get_bool_or(obj, "plot", out.plot, path);
    out.log_scale = get_bool_or(obj, "log_scale", out.log_scale, path);
    if (obj.contains("verify_samples")) {
        const long v = get_integer(obj, "verify_samples", path);
        if (v < 1) throw SchemaError(path + ".verify_samples", "must be >= 1");
        out.verify_samples = static_cast<int>(v);
    }
    if (obj.contains("verify_slices")) {
        const long v = get_integer(obj, "verify_slices", path);
        if (v < 2) throw SchemaError(path + ".verify_slices", "must be >= 2");
        out.verify_slices = static_cast<int>(v);
    }
    out.support_margin =
        get_num_or(obj, "support_margin", out.support_margin, path);
    out.fd = get_bool_or(obj, "fd", out.fd, path);
    out.fd_h = get_num_or(obj, "fd_h", out.fd_h, path);
    out.lyapunov = get_bool_or(obj, "lyapunov", out.lyapunov, path);
    out.lyap_transient =
        get_num_or(obj, "lyap_transient", out.lyap_transient, path);
    out.lyap_span = get_num_or(obj, "lyap_span", out.lyap_span, path);
    out.lyap_renorm_dt =
        get_num_or(obj, "lyap_renorm_dt", out.lyap_renorm_dt, path);
    if (obj.contains("mass_times"))
        out.mass_times = get_vec(obj, "mass_times", -1, path);
    return out;
}

json parse_document(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path, "cannot read config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ordered_json spec_to_json(const EmdenSpec& spec) {
    ordered_json o;
    o["system"] = to_string(spec.system);
    o["N"] = spec.dimension;
    o["theta"] = spec.theta;
    o["xi"] = spec.xi;
    o["kappa1"] = spec.kappa1;
    o["kappa2"] = spec.kappa2;
    o["alpha"] = spec.alpha;
    o["d"] = spec.drifts;
    o["a0"] = spec.a0;
    o["a1"] = spec.a1;
    return o;
}

} // namespace

std::string emit_spec(const EmdenSpec& spec) { return spec_to_json(spec).dump(); }

RunConfig parse_config(const std::string& text) {
    const json doc = parse_document(text);
    if (!doc.is_object()) throw SchemaError("$", "expected a JSON object");

    std::vector<std::string_view> allowed;
    for (auto k : kSpecKeys) allowed.push_back(k);
    for (auto k : kIntegrationKeys) allowed.push_back(k);
    allowed.push_back("outputs");
    check_keys(doc, allowed, "$");

    RunConfig rc;
    rc.spec = parse_spec_fields(doc, "$");
    parse_integration_fields(doc, "$", rc.integration);
    rc.outputs = parse_output_fields(doc, "$");

    rc.spec.validate();
    rc.integration.validate(rc.spec);
    return rc;
}

RunConfig parse_config_file(const std::string& path) {
    return parse_config(read_file(path));
}

std::string emit_config(const RunConfig& cfg) {
    ordered_json o = spec_to_json(cfg.spec);
    o["t_end"] = cfg.integration.t_end;
    o["rtol"] = cfg.integration.rtol;
    o["atol"] = cfg.integration.atol;
    o["blowup_floor"] = cfg.integration.blowup_floor;
    o["escape_ceiling"] = cfg.integration.escape_ceiling;
    o["max_steps"] = cfg.integration.max_steps;
    o["dense_dt"] = cfg.integration.dense_dt;

    ordered_json outputs;
    outputs["dir"] = cfg.outputs.dir;
    outputs["plot"] = cfg.outputs.plot;
    outputs["log_scale"] = cfg.outputs.log_scale;
    outputs["verify_samples"] = cfg.outputs.verify_samples;
    outputs["verify_slices"] = cfg.outputs.verify_slices;
    outputs["support_margin"] = cfg.outputs.support_margin;
    outputs["fd"] = cfg.outputs.fd;
    outputs["fd_h"] = cfg.outputs.fd_h;
    outputs["lyapunov"] = cfg.outputs.lyapunov;
    outputs["lyap_transient"] = cfg.outputs.lyap_transient;
    outputs["lyap_span"] = cfg.outputs.lyap_span;
    outputs["lyap_renorm_dt"] = cfg.outputs.lyap_renorm_dt;
    outputs["mass_times"] = cfg.outputs.mass_times;
    o["outputs"] = outputs;

    return o.dump(2) + "\n";
}

SweepConfig parse_sweep_config(const std::string& text) {
    const json doc = parse_document(text);
    if (!doc.is_object()) throw SchemaError("$", "expected a JSON object");

    std::vector<std::string_view> allowed;
    for (auto k : kIntegrationKeys) allowed.push_back(k);
    allowed.push_back("outputs");
    allowed.push_back("runs");
    check_keys(doc, allowed, "$");

    SweepConfig sc;
    parse_integration_fields(doc, "$", sc.integration);
    sc.outputs = parse_output_fields(doc, "$");

    const json& runs = require(doc, "runs", "$");
    if (!runs.is_array()) throw SchemaError("$.runs", "expected an array");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string path = "$.runs[" + std::to_string(i) + "]";
        if (!runs[i].is_object()) throw SchemaError(path, "expected an object");
        check_keys(runs[i], kSpecKeys, path);
        EmdenSpec spec = parse_spec_fields(runs[i], path);
        spec.validate();
        sc.integration.validate(spec);
        sc.runs.push_back(std::move(spec));
    }
    return sc;
}

SweepConfig parse_sweep_config_file(const std::string& path) {
    return parse_sweep_config(read_file(path));
}

std::vector<EmdenSpec> default_sweep_grid() {
    std::vector<EmdenSpec> grid;
    for (SystemKind system : {SystemKind::A, SystemKind::BProof}) {
        for (double theta : {0.5, 1.0, 2.0}) {
            for (int n : {2, 3}) {
                for (double xi : {-2.0, -1.0, 1.0, 2.0}) {
                    EmdenSpec spec;
                    spec.system = system;
                    spec.dimension = n;
                    spec.theta = theta;
                    spec.xi = xi;
                    spec.kappa1 = system == SystemKind::A ? 1.0 : 0.0;
                    spec.kappa2 = system == SystemKind::A ? 0.0 : 1.0;
                    spec.alpha = 1.0;
                    spec.drifts.assign(n, 0.0);
                    spec.a0.resize(n);
                    spec.a1.resize(n);
                    for (int i = 0; i < n; ++i) {
                        spec.a0[i] = 1.0 + 0.3 * i;
                        spec.a1[i] = i % 2 == 0 ? -0.4 : 0.25;
                    }
                    grid.push_back(std::move(spec));
                }
            }
        }
    }
    return grid;
}

} // namespace elf

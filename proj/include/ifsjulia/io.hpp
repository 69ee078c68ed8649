#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifsjulia/grid.hpp"
#include "ifsjulia/ifs.hpp"
#include "ifsjulia/qc.hpp"

namespace ifsjulia {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_fields(const json& obj, std::initializer_list<const char*> known,
                                  const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument(where + ": unknown field '" + it.key() + "'");
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IFS definition files
// ---------------------------------------------------------------------------
//
// {
//   "label": "cantor_thirds",
//   "maps": [ {"a_re": 0.333..., "a_im": 0.0, "b_re": -0.5, "b_im": 0.0}, ... ]
// }

inline ConformalIFS ifs_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    detail::reject_unknown_fields(j, {"label", "maps"}, where);
    if (!j.contains("label") || !j.at("label").is_string())
        throw std::invalid_argument(where + ": missing string field 'label'");
    if (!j.contains("maps") || !j.at("maps").is_array() || j.at("maps").empty())
        throw std::invalid_argument(where + ": missing non-empty array field 'maps'");
    ConformalIFS ifs;
    ifs.label = j.at("label").get<std::string>();
    std::size_t idx = 0;
    for (const auto& m : j.at("maps")) {
        const std::string ctx = where + ": maps[" + std::to_string(idx) + "]";
        if (!m.is_object()) throw std::invalid_argument(ctx + ": expected an object");
        detail::reject_unknown_fields(m, {"a_re", "a_im", "b_re", "b_im"}, ctx);
        for (const char* f : {"a_re", "a_im", "b_re", "b_im"})
            if (!m.contains(f) || !m.at(f).is_number())
                throw std::invalid_argument(ctx + ": missing numeric field '" + f + "'");
        try {
            ifs.maps.emplace_back(cplx(m.at("a_re").get<double>(), m.at("a_im").get<double>()),
                                  cplx(m.at("b_re").get<double>(), m.at("b_im").get<double>()));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(ctx + ": " + e.what());
        }
        ++idx;
    }
    return ifs;
}

inline ConformalIFS load_ifs_file(const std::string& path) {
    return ifs_from_json(detail::load_json_file(path), path);
}

inline json ifs_to_json(const ConformalIFS& ifs) {
    json j;
    j["label"] = ifs.label;
    j["maps"] = json::array();
    for (const auto& m : ifs.maps)
        j["maps"].push_back({{"a_re", m.a.real()},
                             {"a_im", m.a.imag()},
                             {"b_re", m.b.real()},
                             {"b_im", m.b.imag()}});
    return j;
}

inline void save_ifs_file(const ConformalIFS& ifs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << ifs_to_json(ifs).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string command;  // attractor | semigroup | uqr | verify | report
    std::string ifs_path;
    std::size_t resolution = 512;
    Window window;
    std::uint64_t seed = 1;
    std::size_t max_iter = 0;  // 0 = calibrate from contraction factor and pixel size
    double delta = 0.005;
    double eps = 0.04;
    std::string out_dir = "out";
    std::size_t chaos_points = 100000;
    std::size_t burn_in = 64;
    std::size_t words_per_pixel = 64;
    std::size_t word_length = 1;
    std::size_t orbit_samples = 10000;
};

inline RunConfig config_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    detail::reject_unknown_fields(
        j,
        {"command", "ifs", "resolution", "window", "seed", "max_iter", "delta", "eps", "out_dir",
         "chaos_points", "burn_in", "words_per_pixel", "word_length", "orbit_samples"},
        where);
    RunConfig c;
    auto get = [&](const char* key, auto& slot) {
        using T = std::decay_t<decltype(slot)>;
        if (!j.contains(key)) return;
        try {
            slot = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(where + ": field '" + std::string(key) + "': " + e.what());
        }
    };
    get("command", c.command);
    get("ifs", c.ifs_path);
    get("resolution", c.resolution);
    get("seed", c.seed);
    get("max_iter", c.max_iter);
    get("delta", c.delta);
    get("eps", c.eps);
    get("out_dir", c.out_dir);
    get("chaos_points", c.chaos_points);
    get("burn_in", c.burn_in);
    get("words_per_pixel", c.words_per_pixel);
    get("word_length", c.word_length);
    get("orbit_samples", c.orbit_samples);
    if (j.contains("window")) {
        const auto& w = j.at("window");
        detail::reject_unknown_fields(w, {"center_re", "center_im", "half_width"},
                                      where + ": window");
        if (w.contains("center_re")) c.window.center.real(w.at("center_re").get<double>());
        if (w.contains("center_im")) c.window.center.imag(w.at("center_im").get<double>());
        if (w.contains("half_width")) c.window.half_width = w.at("half_width").get<double>();
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    return config_from_json(detail::load_json_file(path), path);
}

inline json config_to_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["ifs"] = c.ifs_path;
    j["resolution"] = c.resolution;
    j["window"] = {{"center_re", c.window.center.real()},
                   {"center_im", c.window.center.imag()},
                   {"half_width", c.window.half_width}};
    j["seed"] = c.seed;
    j["max_iter"] = c.max_iter;
    j["delta"] = c.delta;
    j["eps"] = c.eps;
    j["out_dir"] = c.out_dir;
    j["chaos_points"] = c.chaos_points;
    j["burn_in"] = c.burn_in;
    j["words_per_pixel"] = c.words_per_pixel;
    j["word_length"] = c.word_length;
    j["orbit_samples"] = c.orbit_samples;
    return j;
}

/// FNV-1a over the canonical (sorted keys, shortest round-trip numerals)
/// serialization; stable across platforms for identical configs.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash(const RunConfig& c) {
    std::ostringstream os;
    os << std::hex << fnv1a64(config_to_json(c).dump());
    return os.str();
}

// ---------------------------------------------------------------------------
// Metrics records
// ---------------------------------------------------------------------------

struct MetricsGate {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string op;  // "<=", ">=", "=="
    bool pass = false;
};

inline json distortion_to_json(const DistortionReport& r) {
    return {{"sup_abs_mu", r.sup_abs_mu},
            {"k_estimate", r.k_estimate},
            {"samples", r.n_samples},
            {"degenerate", r.n_degenerate},
            {"valid", r.valid}};
}

inline MetricsGate gate_le(const std::string& name, double value, double threshold) {
    return {name, value, threshold, "<=", value <= threshold};
}
inline MetricsGate gate_ge(const std::string& name, double value, double threshold) {
    return {name, value, threshold, ">=", value >= threshold};
}
inline MetricsGate gate_eq(const std::string& name, double value, double threshold) {
    return {name, value, threshold, "==", value == threshold};
}

struct MetricsRecord {
    std::string run_id;
    std::string command;
    std::string system;
    std::string config_hash;
    double wall_time_s = 0.0;
    std::vector<MetricsGate> gates;
    json details = json::object();

    bool all_pass() const {
        for (const auto& g : gates)
            if (!g.pass) return false;
        return true;
    }
};

inline json metrics_to_json(const MetricsRecord& r) {
    json j;
    j["schema"] = "ifsjulia-metrics-v1";
    j["run_id"] = r.run_id;
    j["command"] = r.command;
    j["system"] = r.system;
    j["config_hash"] = r.config_hash;
    j["wall_time_s"] = r.wall_time_s;
    j["gates"] = json::array();
    for (const auto& g : r.gates)
        j["gates"].push_back({{"name", g.name},
                              {"value", g.value},
                              {"threshold", g.threshold},
                              {"op", g.op},
                              {"pass", g.pass}});
    j["details"] = r.details;
    return j;
}

inline MetricsRecord metrics_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || j.value("schema", "") != "ifsjulia-metrics-v1")
        throw std::invalid_argument(where + ": not an ifsjulia-metrics-v1 record");
    MetricsRecord r;
    r.run_id = j.value("run_id", "");
    r.command = j.value("command", "");
    r.system = j.value("system", "");
    r.config_hash = j.value("config_hash", "");
    r.wall_time_s = j.value("wall_time_s", 0.0);
    if (j.contains("gates"))
        for (const auto& g : j.at("gates"))
            r.gates.push_back({g.value("name", ""), g.value("value", 0.0),
                               g.value("threshold", 0.0), g.value("op", "<="),
                               g.value("pass", false)});
    if (j.contains("details")) r.details = j.at("details");
    return r;
}

inline void save_metrics(const MetricsRecord& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << metrics_to_json(r).dump(2) << "\n";
}

inline MetricsRecord load_metrics(const std::string& path) {
    return metrics_from_json(detail::load_json_file(path), path);
}

}  // namespace ifsjulia

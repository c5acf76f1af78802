#include "kaa/config.hpp"

#include <cstdlib>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kaa {

namespace {

using nlohmann::json;

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(path, "missing config key: " + path);
    return j.at(key);
}

template <class T>
T number(const json& j, const std::string& key, const std::string& prefix = "") {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError(path, "config key " + path + " must be a number");
    return v.get<T>();
}

Vec3 vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(path, "config key " + path + " must be a 3-vector");
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
        if (!v[k].is_number()) throw ConfigError(path, "config key " + path + " must be numeric");
        out[k] = v[k].get<double>();
    }
    return out;
}

json to_array(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace

SimConfig config_from_json(const json& j) {
    SimConfig c;
    const json& p = require(j, "params", "params");
    c.params.q = number<double>(p, "q", "params");
    c.params.Q = number<double>(p, "Q", "params");
    c.params.Qc = number<double>(p, "Qc", "params");
    c.params.mg = number<double>(p, "mg", "params");
    c.params.Mc = number<double>(p, "Mc", "params");
    const double n = number<double>(j, "n");
    if (n < 1 || n != std::floor(n)) throw ConfigError("n", "config key n must be a positive integer");
    c.n = static_cast<std::size_t>(n);
    const bool have_eps = j.contains("eps");
    if (have_eps) c.eps = number<double>(j, "eps");
    c.dt = number<double>(j, "dt");
    c.t_end = number<double>(j, "t_end");
    c.seed = number<std::uint64_t>(j, "seed");
    c.diag_every = number<int>(j, "diag_every");

    const json& s = require(j, "sampler", "sampler");
    const json& type = require(s, "type", "sampler.type");
    if (!type.is_string()) throw ConfigError("sampler.type", "config key sampler.type must be a string");
    c.sampler.type = type.get<std::string>();
    c.sampler.center_x = vec3(require(s, "center_x", "sampler.center_x"), "sampler.center_x");
    c.sampler.center_v = vec3(require(s, "center_v", "sampler.center_v"), "sampler.center_v");
    const json& w = require(s, "widths", "sampler.widths");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        throw ConfigError("sampler.widths", "config key sampler.widths must be [position, velocity]");
    c.sampler.widths[0] = w[0].get<double>();
    c.sampler.widths[1] = w[1].get<double>();
    c.sampler.amplitude = number<double>(s, "amplitude", "sampler");
    if (s.contains("r_min_floor")) c.sampler.r_min_floor = number<double>(s, "r_min_floor", "sampler");
    if (!have_eps) c.eps = default_softening(c);

    if (j.contains("charge")) {
        const json& ch = j.at("charge");
        if (ch.contains("x0")) c.charge_x0 = vec3(ch.at("x0"), "charge.x0");
        if (ch.contains("v0")) c.charge_v0 = vec3(ch.at("v0"), "charge.v0");
    }
    if (j.contains("snapshot_every")) c.snapshot_every = number<int>(j, "snapshot_every");
    if (j.contains("snapshot_from")) c.snapshot_from = number<double>(j, "snapshot_from");

    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", std::string("invalid config: ") + e.what());
    }
    return c;
}

SimConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", "cannot open config file " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const SimConfig& c) {
    return {
        {"params", {{"q", c.params.q}, {"Q", c.params.Q}, {"Qc", c.params.Qc}, {"mg", c.params.mg}, {"Mc", c.params.Mc}}},
        {"n", c.n},
        {"eps", c.eps},
        {"dt", c.dt},
        {"t_end", c.t_end},
        {"seed", c.seed},
        {"diag_every", c.diag_every},
        {"sampler",
         {{"type", c.sampler.type},
          {"center_x", to_array(c.sampler.center_x)},
          {"center_v", to_array(c.sampler.center_v)},
          {"widths", json::array({c.sampler.widths[0], c.sampler.widths[1]})},
          {"amplitude", c.sampler.amplitude},
          {"r_min_floor", c.sampler.r_min_floor}}},
        {"charge", {{"x0", to_array(c.charge_x0)}, {"v0", to_array(c.charge_v0)}}},
        {"snapshot_every", c.snapshot_every},
        {"snapshot_from", c.snapshot_from},
    };
}

int apply_thread_cap() {
    const char* env = std::getenv("KAA_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) return 0;
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
    return static_cast<int>(n);
}

}  // namespace kaa

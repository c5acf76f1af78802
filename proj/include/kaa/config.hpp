#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "kaa/sim.hpp"

namespace kaa {

/// Malformed or incomplete configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error(what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Required keys: params{q,Q,Qc,mg,Mc}, n, eps, dt, t_end, seed,
/// sampler{type,center_x,center_v,widths,amplitude}, diag_every.
/// Optional: charge{x0,v0}, snapshot_every, snapshot_from, sampler.r_min_floor.
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::string& path);
nlohmann::json config_to_json(const SimConfig& cfg);

/// Caps OpenMP parallelism at $KAA_THREADS when set. Returns the cap in force (0 if none).
int apply_thread_cap();

}  // namespace kaa

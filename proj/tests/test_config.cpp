#include <cstdlib>

#include "doctest.h"
#include "kaa/config.hpp"
#include "kaa/sim.hpp"

using namespace kaa;
using nlohmann::json;

namespace {

json full() {
    return json::parse(R"({
      "params": {"q": 1, "Q": 1, "Qc": 1, "mg": 1, "Mc": 6.283185307179586},
      "n": 100, "eps": 0.05, "dt": 0.02, "t_end": 5, "seed": 3, "diag_every": 10,
      "sampler": {"type": "shell", "center_x": [2, 0, 0], "center_v": [1, 0, 0],
                  "widths": [0.4, 0.2], "amplitude": 0.1}
    })");
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("round trip") {
    const SimConfig c = config_from_json(full());
    CHECK(c.n == 100);
    CHECK(c.sampler.type == "shell");
    CHECK(c.sampler.widths[1] == 0.2);
    const SimConfig d = config_from_json(config_to_json(c));
    CHECK(d.n == c.n);
    CHECK(d.params.Mc == c.params.Mc);
    CHECK(d.sampler.center_v == c.sampler.center_v);
}

TEST_CASE("missing keys are named") {
    for (const std::string path : {"params.Qc", "n", "sampler.widths", "diag_every"}) {
        json j = full();
        const auto dot = path.find('.');
        if (dot == std::string::npos)
            j.erase(path);
        else
            j[path.substr(0, dot)].erase(path.substr(dot + 1));
        try {
            config_from_json(j);
            FAIL("accepted a config without " << path);
        } catch (const ConfigError& e) {
            CHECK(e.key() == path);
            CHECK(std::string(e.what()).find(path) != std::string::npos);
        }
    }
}

TEST_CASE("softening defaults to the particle spacing") {
    json j = full();
    j.erase("eps");
    const SimConfig c = config_from_json(j);
    CHECK(c.eps > 0);
    CHECK(c.eps == default_softening(c));
    // Eight times the particles in the same box halves the spacing.
    j["n"] = 800;
    const double e8 = config_from_json(j).eps;
    CHECK(e8 / c.eps == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("type errors") {
    json j = full();
    j["sampler"]["center_x"] = json::array({1, 2});
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    j = full();
    j["n"] = 2.5;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("thread cap") {
    setenv("KAA_THREADS", "1", 1);
    CHECK(apply_thread_cap() == 1);
    unsetenv("KAA_THREADS");
}

}  // TEST_SUITE

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result kaa(const std::string& args, bool quiet_stderr = false) {
    const std::string cmd = std::string(KAA_BIN) + " " + args + (quiet_stderr ? " 2>/dev/null" : " 2>&1");
    Result r;
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    std::array<char, 4096> buf;
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(f);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string join(const json& v) {
    std::string s;
    for (const auto& c : v) {
        char b[40];
        std::snprintf(b, sizeof b, "%.17g ", c.get<double>());
        s += b;
    }
    return s;
}

std::filesystem::path scratch(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("kaa_cli_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

const char* kSmallConfig = R"({
  "params": {"q": 1, "Q": 1, "Qc": 1, "mg": 1, "Mc": 6.283185307179586},
  "n": 40, "eps": 0.05, "dt": 0.05, "t_end": 2, "seed": 5, "diag_every": 5,
  "sampler": {"type": "gaussian", "center_x": [2, 0, 0], "center_v": [1, 0, 0],
              "widths": [0.5, 0.3], "amplitude": 0.05}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
    CHECK(kaa("verify --suite nope", true).code == 2);
    CHECK(kaa("transform --x 0 0 0 --v 1 0 0 --q 1", true).code == 3);
    CHECK(kaa("transform --x 1 0 0 --v 1 0 0 --q -1", true).code == 3);
    CHECK(kaa("transform --x 1 0 --v 1 0 0 --q 1", true).code == 2);
    CHECK(kaa("frobnicate", true).code == 2);

    const auto dir = scratch("missing");
    json cfg = json::parse(kSmallConfig);
    cfg.erase("dt");
    std::ofstream(dir / "c.json") << cfg.dump();
    const Result r = kaa("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "run").string());
    CHECK(r.code == 2);
    CHECK(r.out.find("dt") != std::string::npos);
}

TEST_CASE("empty verify passes") {
    const Result r = kaa("verify --suite all --samples 0", true);
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.size() == 5);
    for (const json& s : j) {
        CHECK(s["pass"].get<bool>());
        CHECK(s["n"] == 0);
    }
}

TEST_CASE("transform round trip") {
    const Result f = kaa("transform --x 1 2 0.5 --v 0.3 -0.2 0.1 --q 1.5", true);
    REQUIRE(f.code == 0);
    const json a = json::parse(f.out);
    const Result b = kaa("transform --inverse --theta " + join(a["theta"]) + "--a " + join(a["a"]) + "--q 1.5", true);
    REQUIRE(b.code == 0);
    const json g = json::parse(b.out);
    const double want[6] = {1, 2, 0.5, 0.3, -0.2, 0.1};
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(g["x"][k].get<double>() - want[k]) < 1e-12);
        CHECK(std::abs(g["v"][k].get<double>() - want[3 + k]) < 1e-12);
    }
}

TEST_CASE("radial example") {
    // x = (2,0,0), v = (0.4,0,0), q = 1: H = 0.66, r_min = q/H, theta along x
    // equal to -r_min K(r/r_min) + 2rv/a with K(y) = sqrt(y(y-1)) - acosh(sqrt(y)).
    const Result r = kaa("transform --x 2 0 0 --v 0.4 0 0 --q 1", true);
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    const double H = 0.16 + 0.5, a = std::sqrt(H), rmin = 1 / H, y = 2 / rmin;
    const double K = std::sqrt(y * (y - 1)) - std::acosh(std::sqrt(y));
    CHECK(std::abs(j["a"][0].get<double>() - a) < 1e-14);
    CHECK(std::abs(j["theta"][0].get<double>() - (-rmin * K + 2 * 2 * 0.4 / a)) < 1e-12);
    CHECK(j["lambda"].get<double>() == 0.0);
    CHECK(j["kappa"].get<double>() == 0.0);
    CHECK(std::abs(j["xi"].get<double>() - 1 / a) < 1e-14);
    CHECK(j["iota"] == 1);
}

TEST_CASE("flow chaining") {
    const std::string s0 = "--x 1.5 -0.5 0.2 --v 0.1 0.6 -0.3 --q 1";
    const json id = json::parse(kaa("flow " + s0 + " --t 0", true).out);
    CHECK(std::abs(id["x"][0].get<double>() - 1.5) < 1e-14);
    CHECK(std::abs(id["v"][1].get<double>() - 0.6) < 1e-14);
    const json one = json::parse(kaa("flow " + s0 + " --t 7", true).out);
    const json two = json::parse(
        kaa("flow --x " + join(one["x"]) + "--v " + join(one["v"]) + "--q 1 --t 5", true).out);
    const json direct = json::parse(kaa("flow " + s0 + " --t 12", true).out);
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(two["x"][k].get<double>() - direct["x"][k].get<double>()) < 1e-9);
        CHECK(std::abs(two["v"][k].get<double>() - direct["v"][k].get<double>()) < 1e-9);
    }
}

TEST_CASE("simulate writes its outputs") {
    const auto dir = scratch("run");
    std::ofstream(dir / "c.json") << kSmallConfig;
    const Result r = kaa("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), true);
    REQUIRE(r.code == 0);
    for (const char* f : {"diagnostics.csv", "particles.csv", "summary.json", "plot.gp"})
        CHECK(std::filesystem::exists(dir / "out" / f));
    std::ifstream in(dir / "out" / "summary.json");
    const json s = json::parse(in);
    CHECK(s.contains("analysis"));
    CHECK(s["analysis"]["energy_drift"].get<double>() < 1e-2);

    // Deterministic rerun.
    REQUIRE(kaa("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "again").string(), true).code == 0);
    for (const char* f : {"diagnostics.csv", "particles.csv"}) {
        std::ifstream a(dir / "out" / f), b(dir / "again" / f);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }
}

}  // TEST_SUITE

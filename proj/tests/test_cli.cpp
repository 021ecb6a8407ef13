// Drives the built `wvb` executable end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wvb/io.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("wvb_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run_wvb(const std::string& args) {
    const fs::path err_file = fs::temp_directory_path() / "wvb_cli_stderr.txt";
    const std::string cmd = std::string("\"") + WVB_EXE + "\" " + args + " >/dev/null 2>\"" + err_file.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = wvb::read_file(err_file);
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

json load(const fs::path& p) { return json::parse(wvb::read_file(p)); }

}  // namespace

TEST_CASE("simulate writes one file per channel and is reproducible") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    REQUIRE(run_wvb("simulate --out " + q(a)).code == 0);
    REQUIRE(run_wvb("simulate --out " + q(b)).code == 0);
    for (const char* name : {"modulated.csv", "empty_x.csv", "empty_y.csv", "path1_only.csv", "path2_only.csv"}) {
        CHECK(fs::exists(a / name));
        CHECK(wvb::read_file(a / name) == wvb::read_file(b / name));
    }
    CHECK(wvb::read_file(a / "config.json") == wvb::read_file(b / "config.json"));
    const json m = load(a / "manifest.json");
    CHECK(m["tool_version"] == "0.1.0");
    CHECK(m["seed"] == 20190517);

    const fs::path c = scratch("sim_c");
    REQUIRE(run_wvb("simulate --seed 11 --single-file --out " + q(c)).code == 0);
    CHECK(fs::exists(c / "campaign.csv"));
    CHECK_FALSE(fs::exists(c / "modulated.csv"));
}

TEST_CASE("simulate rejects bad configuration with exit 2") {
    const fs::path dir = scratch("bad_cfg");
    std::ofstream(dir / "cfg.json") << R"({"chi_grid": [0.0, 7.0]})";
    const Run r = run_wvb("simulate --config " + q(dir / "cfg.json") + " --out " + q(dir / "out"));
    CHECK(r.code == 2);
    CHECK(r.err.find("chi_grid") != std::string::npos);

    std::ofstream(dir / "typo.json") << R"({"counts": 5})";
    CHECK(run_wvb("simulate --config " + q(dir / "typo.json") + " --out " + q(dir / "out")).code == 2);
    CHECK(run_wvb("simulate --config " + q(dir / "absent.json") + " --out " + q(dir / "out")).code == 3);
    CHECK(run_wvb("simulate").code == 2);
    CHECK(run_wvb("frobnicate").code == 2);
}

TEST_CASE("analyze and verify on the default campaign") {
    const fs::path root = scratch("pipeline");
    REQUIRE(run_wvb("simulate --out " + q(root / "data")).code == 0);
    REQUIRE(run_wvb("analyze " + q(root / "data") + " --out " + q(root / "ana")).code == 0);
    for (const char* name : {"fits.csv", "weak_values.csv", "corrected.csv", "postselection.csv", "visibility.json",
                             "analysis_config.json", "manifest.json"})
        CHECK(fs::exists(root / "ana" / name));

    std::ifstream wv_in(root / "ana" / "weak_values.csv");
    const auto wv = wvb::read_weak_values_csv(wv_in);
    REQUIRE_FALSE(wv.empty());
    CHECK(wv[0].chi == 0.0);
    CHECK(std::abs(wv[0].re - 0.5) < 3 * wv[0].sigma_re);
    CHECK(std::abs(load(root / "ana" / "visibility.json")["eta"].get<double>() - 0.79) < 0.01);

    REQUIRE(run_wvb("verify " + q(root / "ana") + " --out " + q(root / "ver") + " --theory-overlay").code == 0);
    const json report = load(root / "ver" / "report.json");
    CHECK(report["pass"] == true);
    CHECK(report["summary"]["rms_residual"].get<double>() < 0.05);
    CHECK(fs::exists(root / "ver" / "commutator.csv"));
    CHECK(fs::exists(root / "ver" / "theory_curve.csv"));

    // an unreachable bound turns the same analysis into an acceptance failure
    CHECK(run_wvb("verify " + q(root / "ana") + " --out " + q(root / "ver_tight") + " --rms-bound 1e-6").code == 1);
    // output may not overwrite the inputs
    CHECK(run_wvb("analyze " + q(root / "data") + " --out " + q(root / "data")).code == 2);
}

TEST_CASE("analyze reports missing channels with exit 4") {
    const fs::path root = scratch("missing");
    REQUIRE(run_wvb("simulate --out " + q(root / "data")).code == 0);
    fs::remove(root / "data" / "path1_only.csv");
    const Run r = run_wvb("analyze " + q(root / "data") + " --out " + q(root / "ana"));
    CHECK(r.code == 4);
    CHECK(r.err.find("path1_only") != std::string::npos);

    CHECK(run_wvb("verify " + q(root / "nothing") + " --out " + q(root / "ver")).code == 4);
    CHECK(run_wvb("analyze " + q(root / "nowhere") + " --out " + q(root / "ana2")).code != 0);
}

TEST_CASE("a wrong analysis alpha fails verification") {
    const fs::path root = scratch("wrong_alpha");
    REQUIRE(run_wvb("simulate --out " + q(root / "data")).code == 0);
    std::ofstream(root / "half.json") << json{{"analysis", {{"alpha", wvb::kDefaultAlpha / 2}}}}.dump();
    REQUIRE(run_wvb("analyze " + q(root / "data") + " --config " + q(root / "half.json") + " --out " + q(root / "ana")).code == 0);
    CHECK(run_wvb("verify " + q(root / "ana") + " --out " + q(root / "ver")).code == 1);
    CHECK(load(root / "ver" / "report.json")["pass"] == false);
}

TEST_CASE("noiseless pipeline closes the identity") {
    const fs::path root = scratch("noiseless");
    REQUIRE(run_wvb("simulate --noiseless --out " + q(root / "data")).code == 0);
    REQUIRE(run_wvb("analyze " + q(root / "data") + " --out " + q(root / "ana")).code == 0);
    REQUIRE(run_wvb("verify " + q(root / "ana") + " --out " + q(root / "ver")).code == 0);
    const json report = load(root / "ver" / "report.json");
    CHECK(report["summary"]["rms_residual"].get<double>() < 1e-8);
    CHECK(report["summary"]["n_excluded"] == 1);
}

TEST_CASE("selftest") {
    const auto start = std::chrono::steady_clock::now();
    CHECK(run_wvb("selftest").code == 0);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 10.0);
    CHECK(run_wvb("selftest --perturb-prefactor").code == 1);
}

#include "wvb/io.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace wvb;
using nlohmann::json;

namespace {

std::string field_of(const json& j) {
    try {
        run_config_from_json(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("format_double round-trips") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("run config JSON round-trip") {
    RunConfig cfg;
    cfg.experiment.seed = 42;
    cfg.experiment.chi_grid = {0.0, 1.0, 2.0};
    cfg.experiment.protocol.eta = 0.5;
    cfg.experiment.datasets.empty_y = false;
    cfg.analysis_alpha = 0.2;
    cfg.rms_bound = 0.1;
    cfg.analysis.reconstruction.p_min = 0.02;
    const RunConfig back = run_config_from_json(to_json(cfg));
    CHECK(back.experiment.seed == 42);
    CHECK(back.experiment.chi_grid == cfg.experiment.chi_grid);
    CHECK(back.experiment.protocol.eta == 0.5);
    CHECK_FALSE(back.experiment.datasets.empty_y);
    REQUIRE(back.analysis_alpha.has_value());
    CHECK(*back.analysis_alpha == 0.2);
    CHECK(back.rms_bound == 0.1);
    CHECK(back.analysis.reconstruction.p_min == 0.02);
    CHECK(to_json(back) == to_json(cfg));

    // partial documents fill in defaults
    const RunConfig partial = run_config_from_json(json{{"seed", 7}});
    CHECK(partial.experiment.seed == 7);
    CHECK(partial.experiment.counts_per_setting == 1e6);
    CHECK_FALSE(partial.analysis_alpha.has_value());
}

TEST_CASE("resolved analysis takes alpha, omega and delta from the protocol") {
    RunConfig cfg;
    cfg.experiment.protocol.omega = 5e4;
    cfg.experiment.protocol.delta = 0.3;
    CHECK(cfg.resolved_analysis().reconstruction.alpha == cfg.experiment.protocol.alpha);
    CHECK(cfg.resolved_analysis().omega == 5e4);
    CHECK(cfg.resolved_analysis().delta == 0.3);
    cfg.analysis_alpha = 0.1;
    CHECK(cfg.resolved_analysis().reconstruction.alpha == 0.1);
}

TEST_CASE("config parsing is strict") {
    CHECK(field_of(json{{"sede", 1}}) == "sede");
    CHECK(field_of(json{{"protocol", {{"alpha", "big"}}}}) == "protocol.alpha");
    CHECK(field_of(json{{"protocol", {{"beta", 1.0}}}}) == "protocol.beta");
    CHECK(field_of(json{{"chi_grid", {0.0, 7.0}}}) == "chi_grid");
    CHECK(field_of(json{{"chi_grid", "0,1"}}) == "chi_grid");
    CHECK(field_of(json{{"counts_per_setting", 0}}) == "counts_per_setting");
    CHECK(field_of(json{{"bins_per_period", 2.5}}) == "bins_per_period");
    CHECK(field_of(json{{"datasets", {{"modulated", 1}}}}) == "datasets.modulated");
    CHECK(field_of(json{{"analysis", {{"p_min", -1}}}}) == "analysis.p_min");
    CHECK(field_of(json::array()) != "");
}

TEST_CASE("config files") {
    const auto dir = std::filesystem::temp_directory_path() / "wvb_io_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    write_file_atomic(dir / "bad.json", "{\n  \"seed\": 1,\n  oops\n}\n");
    try {
        load_run_config(dir / "bad.json");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_run_config(dir / "absent.json"), IoError);

    RunConfig cfg;
    cfg.experiment.seed = 99;
    write_file_atomic(dir / "manifest.json", json{{"tool_version", "0.1.0"}, {"config", to_json(cfg)}}.dump());
    CHECK(load_run_config(dir / "manifest.json").experiment.seed == 99);
    CHECK(read_file(dir / "manifest.json").find("tool_version") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset CSV round-trip") {
    ExperimentConfig c;
    c.counts_per_setting = 1e4;
    c.chi_grid = {0.0, 0.1234567890123, 3.0};
    for (bool noiseless : {false, true}) {
        c.noiseless = noiseless;
        const auto data = generate_dataset(c);
        std::stringstream ss;
        write_datasets_csv(ss, data);
        CHECK(ss.str().rfind(kDatasetHeader, 0) == 0);
        const auto back = read_datasets_csv(ss);
        REQUIRE(back.size() == data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(back[i].chi == data[i].chi);
            CHECK(back[i].channel == data[i].channel);
            CHECK(back[i].counts == data[i].counts);
            CHECK(back[i].bin_centers == data[i].bin_centers);
            CHECK(back[i].exposure == data[i].exposure);
        }
    }
}

TEST_CASE("dataset CSV errors") {
    std::stringstream wrong_header("a,b,c\n");
    CHECK_THROWS_AS(read_datasets_csv(wrong_header), IoError);
    std::stringstream bad_channel(std::string(kDatasetHeader) + "\n0,path3,1e-6,5,10\n");
    CHECK_THROWS_AS(read_datasets_csv(bad_channel), IoError);
    std::stringstream bad_number(std::string(kDatasetHeader) + "\n0,modulated,1e-6,five,10\n");
    CHECK_THROWS_AS(read_datasets_csv(bad_number), IoError);
    std::stringstream negative(std::string(kDatasetHeader) + "\n0,modulated,1e-6,-5,10\n");
    CHECK_THROWS_AS(read_datasets_csv(negative), IoError);
}

TEST_CASE("weak value and post-selection CSV round-trip") {
    std::vector<WeakValueEstimate> wv(3);
    wv[0] = {0.0, 0.5, 0.0, 0.01, 0.02, 0.01, 0.02, 1.0, false};
    wv[1] = {1.0, 0.5, -0.27, 0.011, 0.013, 0.01, 0.012, 0.77, false};
    wv[2] = {kPi, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, true};
    std::stringstream ss;
    write_weak_values_csv(ss, wv);
    CHECK(ss.str().rfind(kWeakValuesHeader, 0) == 0);
    const auto back = read_weak_values_csv(ss);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].chi == wv[i].chi);
        CHECK(back[i].excluded == wv[i].excluded);
        if (!wv[i].excluded) {
            CHECK(back[i].re == wv[i].re);
            CHECK(back[i].im == wv[i].im);
            CHECK(back[i].sigma_im == wv[i].sigma_im);
        }
    }

    const std::vector<PostselectionPoint> px = {{0.0, 1.0, 0.001}, {1.0, 0.77, 0.002}};
    const std::vector<PostselectionPoint> py = {{0.0, 0.5, 0.003}, {1.0, 0.92, 0.004}};
    std::stringstream ps;
    write_postselection_csv(ps, px, py);
    std::vector<PostselectionPoint> bx, by;
    read_postselection_csv(ps, bx, by);
    REQUIRE(bx.size() == 2);
    CHECK(bx[1].p == 0.77);
    CHECK(by[1].sigma == 0.004);
}

TEST_CASE("report JSON") {
    CommutatorReport r;
    r.rows.push_back({0.0, 0.01, 0.02, 0.0, 0.01, 0.0, false});
    r.rows.push_back({kPi, 0.0, 0.0, 0.0, 0.0, 0.01, 0.0, true});
    r.summary = {0.01, 0.01, 1};
    const json j = to_json(r);
    CHECK(j["summary"]["n_excluded"] == 1);
    CHECK(j["rows"][1]["lhs"].is_null());
    CHECK(j["rows"][1]["excluded"] == true);

    std::stringstream ss;
    write_commutator_csv(ss, r);
    CHECK(ss.str().rfind(kCommutatorHeader, 0) == 0);
    CHECK(ss.str().find("nan") != std::string::npos);

    const VisibilityEstimate v{0.79, 0.004, 0.01, 0.5, false};
    const VisibilityEstimate vb = visibility_from_json(to_json(v));
    CHECK(vb.eta == v.eta);
    CHECK(vb.sigma_eta == v.sigma_eta);

    std::stringstream curve;
    write_theory_curve_csv(curve, 5);
    std::string line;
    int lines = 0;
    while (std::getline(curve, line)) ++lines;
    CHECK(lines == 6);
}

#include "wvb/cli.hpp"

#include "wvb/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace wvb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool same_directory(const fs::path& a, const fs::path& b) {
    std::error_code ec;
    return fs::exists(a, ec) && fs::exists(b, ec) && fs::equivalent(a, b, ec);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError(dir.string() + ": cannot create output directory");
}

template <typename Writer>
std::string render(Writer&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

std::optional<RunConfig> find_data_config(const fs::path& data_dir) {
    for (const char* name : {"manifest.json", "config.json"}) {
        if (fs::exists(data_dir / name)) return load_run_config(data_dir / name);
    }
    return std::nullopt;
}

json manifest(const char* command, const RunConfig& cfg, const std::vector<std::string>& outputs,
              const json& timings, const json& inputs = json::object()) {
    return {{"tool_version", kToolVersion}, {"command", command},       {"config", to_json(cfg)},
            {"seed", cfg.experiment.seed},  {"inputs", inputs},         {"outputs", outputs},
            {"timings_ms", timings}};
}

}  // namespace

int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err) {
    const auto start = Clock::now();
    RunConfig cfg;
    try {
        if (args.config) cfg = load_run_config(*args.config);
        if (args.seed) cfg.experiment.seed = *args.seed;
        if (args.noiseless) cfg.experiment.noiseless = true;
        cfg.experiment.validate();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }

    try {
        ensure_dir(args.out_dir);
        const auto gen_start = Clock::now();
        const std::vector<BinnedCounts> data = generate_dataset(cfg.experiment, args.threads);
        const double gen_ms = elapsed_ms(gen_start);

        std::vector<std::string> outputs;
        if (args.single_file) {
            write_file_atomic(args.out_dir / "campaign.csv", render([&](std::ostream& os) { write_datasets_csv(os, data); }));
            outputs.emplace_back("campaign.csv");
        } else {
            for (Channel c : kAllChannels) {
                if (!cfg.experiment.datasets.enabled(c)) continue;
                std::vector<BinnedCounts> subset;
                for (const auto& d : data)
                    if (d.channel == c) subset.push_back(d);
                const std::string name = std::string(to_string(c)) + ".csv";
                write_file_atomic(args.out_dir / name, render([&](std::ostream& os) { write_datasets_csv(os, subset); }));
                outputs.push_back(name);
            }
        }
        write_file_atomic(args.out_dir / "config.json", to_json(cfg).dump(2) + "\n");
        outputs.emplace_back("config.json");
        const json timings = {{"generate", gen_ms}, {"total", elapsed_ms(start)}};
        write_file_atomic(args.out_dir / "manifest.json", manifest("simulate", cfg, outputs, timings).dump(2) + "\n");
        log << "simulate: " << data.size() << " histograms (" << cfg.experiment.chi_grid.size() << " phases) -> "
            << args.out_dir.string() << '\n';
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }
    return kOk;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& log, std::ostream& err) {
    const auto start = Clock::now();
    if (same_directory(args.data_dir, args.out_dir)) {
        err << "config error: --out must differ from the data directory\n";
        return kConfigError;
    }
    RunConfig cfg;
    try {
        if (args.config) {
            cfg = load_run_config(*args.config);
        } else if (auto found = find_data_config(args.data_dir)) {
            cfg = *found;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }

    std::vector<BinnedCounts> data;
    try {
        data = read_dataset_dir(args.data_dir);
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }
    if (const auto missing = missing_channels(data); !missing.empty()) {
        err << "missing channels:";
        for (const auto& m : missing) err << ' ' << m;
        err << '\n';
        return kMissingData;
    }
    std::size_t n_chi = 0;
    for (const auto& d : data) n_chi += d.channel == Channel::Modulated ? 1 : 0;
    if (n_chi < 3) {
        err << "missing data: need at least 3 phase settings, found " << n_chi << '\n';
        return kMissingData;
    }

    CampaignAnalysis result;
    try {
        result = analyze_campaign(data, cfg.resolved_analysis());
    } catch (const MissingReference& e) {
        err << "missing data: " << e.what() << '\n';
        return kMissingData;
    } catch (const std::exception& e) {
        err << "analysis failed: " << e.what() << '\n';
        return kAcceptanceFailure;
    }

    try {
        ensure_dir(args.out_dir);
        std::vector<std::string> outputs = {"fits.csv",          "weak_values.csv", "corrected.csv",
                                            "postselection.csv", "visibility.json", "analysis_config.json"};
        write_file_atomic(args.out_dir / "fits.csv", render([&](std::ostream& os) {
                              write_fits_csv(os, result.raw_fits, result.corrected_fits);
                          }));
        write_file_atomic(args.out_dir / "weak_values.csv",
                          render([&](std::ostream& os) { write_weak_values_csv(os, result.weak_values); }));
        write_file_atomic(args.out_dir / "corrected.csv",
                          render([&](std::ostream& os) { write_corrected_csv(os, result.corrected); }));
        write_file_atomic(args.out_dir / "postselection.csv",
                          render([&](std::ostream& os) { write_postselection_csv(os, result.px, result.py); }));
        write_file_atomic(args.out_dir / "visibility.json", to_json(result.visibility).dump(2) + "\n");
        write_file_atomic(args.out_dir / "analysis_config.json", to_json(cfg).dump(2) + "\n");
        const json timings = {{"total", elapsed_ms(start)}};
        write_file_atomic(args.out_dir / "manifest.json",
                          manifest("analyze", cfg, outputs, timings, {{"data_dir", args.data_dir.string()}}).dump(2) +
                              "\n");
        log << "analyze: eta = " << format_double(result.visibility.eta) << " +- "
            << format_double(result.visibility.sigma_eta) << ", " << result.weak_values.size() << " weak values -> "
            << args.out_dir.string() << '\n';
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }
    return kOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& log, std::ostream& err) {
    const auto start = Clock::now();
    if (same_directory(args.analysis_dir, args.out_dir)) {
        err << "config error: --out must differ from the analysis directory\n";
        return kConfigError;
    }
    std::vector<std::string> missing;
    for (const char* name : {"weak_values.csv", "postselection.csv"})
        if (!fs::exists(args.analysis_dir / name)) missing.emplace_back(name);
    if (!missing.empty()) {
        err << "missing inputs:";
        for (const auto& m : missing) err << ' ' << m;
        err << '\n';
        return kMissingData;
    }

    double bound = 0.05;
    std::vector<WeakValueEstimate> wv;
    std::vector<PostselectionPoint> px, py;
    try {
        if (fs::exists(args.analysis_dir / "analysis_config.json")) {
            bound = load_run_config(args.analysis_dir / "analysis_config.json").rms_bound;
        }
        std::ifstream wv_in(args.analysis_dir / "weak_values.csv");
        wv = read_weak_values_csv(wv_in);
        std::ifstream ps_in(args.analysis_dir / "postselection.csv");
        read_postselection_csv(ps_in, px, py);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }
    if (args.rms_bound) bound = *args.rms_bound;

    CommutatorReport report;
    try {
        report = verify_commutator(wv, px, py);
    } catch (const ChannelMismatch& e) {
        err << "missing data: " << e.what() << '\n';
        return kMissingData;
    }
    const bool pass = report.summary.rms_residual < bound;

    try {
        ensure_dir(args.out_dir);
        json j = to_json(report);
        j["rms_bound"] = bound;
        j["pass"] = pass;
        std::vector<std::string> outputs = {"report.json", "commutator.csv"};
        write_file_atomic(args.out_dir / "report.json", j.dump(2) + "\n");
        write_file_atomic(args.out_dir / "commutator.csv",
                          render([&](std::ostream& os) { write_commutator_csv(os, report); }));
        if (args.theory_overlay) {
            write_file_atomic(args.out_dir / "theory_curve.csv",
                              render([&](std::ostream& os) { write_theory_curve_csv(os); }));
            outputs.emplace_back("theory_curve.csv");
        }
        const json m = {{"tool_version", kToolVersion},
                        {"command", "verify"},
                        {"inputs", {{"analysis_dir", args.analysis_dir.string()}}},
                        {"rms_bound", bound},
                        {"outputs", outputs},
                        {"timings_ms", {{"total", elapsed_ms(start)}}}};
        write_file_atomic(args.out_dir / "manifest.json", m.dump(2) + "\n");
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    }
    log << "verify: rms(lhs - rhs) = " << format_double(report.summary.rms_residual)
        << ", max = " << format_double(report.summary.max_abs_residual) << ", excluded = " << report.summary.n_excluded
        << ", bound = " << format_double(bound) << " -> " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kOk : kAcceptanceFailure;
}

namespace {

QubitState random_state(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return QubitState(Complex(g(rng), g(rng)), Complex(g(rng), g(rng)));
}

std::array<double, 3> random_axis(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return {g(rng), g(rng), g(rng)};
}

}  // namespace

int cmd_selftest(std::ostream& log, double prefactor_scale) {
    const auto start = Clock::now();
    bool all_ok = true;
    auto report = [&](const char* name, bool ok, double metric) {
        log << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << format_double(metric) << ")\n";
        all_ok = all_ok && ok;
    };

    {
        double worst = 0.0;
        const Operator2 id = pauli::identity();
        for (const Operator2& s : {pauli::x(), pauli::y(), pauli::z()}) worst = std::max(worst, (s * s).max_abs_diff(id));
        worst = std::max(worst, (pauli::z() * pauli::x()).max_abs_diff(Complex(0, 1) * pauli::y()));
        report("pauli algebra", worst < 1e-15, worst);
    }
    {
        std::mt19937_64 rng(7);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const QubitState psi = random_state(rng);
            const auto a = random_axis(rng);
            const auto b = random_axis(rng);
            const QubitState plus_a = QubitState::from_bloch(a[0], a[1], a[2]);
            const QubitState plus_b = QubitState::from_bloch(b[0], b[1], b[2]);
            const Complex direct =
                commutator_expectation_direct(pauli::axis(a[0], a[1], a[2]), pauli::axis(b[0], b[1], b[2]), psi);
            Complex via;
            try {
                via = prefactor_scale * commutator_via_weak_value(psi, projector_from_state(plus_a), plus_b);
            } catch (const NearOrthogonalPostselection&) {
                continue;
            }
            worst = std::max(worst, std::abs(via - direct));
        }
        report("commutator oracle equivalence (1000 draws)", worst < 1e-12, worst);
    }
    {
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const double chi = kTwoPi * k / 100.0;
            if (k == 50) continue;
            const Complex w = path_weak_value(chi);
            worst = std::max(worst, std::abs(w - 1.0 / (1.0 + std::polar(1.0, chi))));
        }
        const bool exact_half = path_weak_value(0.0) == Complex(0.5, 0.0);
        report("weak value 1/(1+e^{i chi})", worst < 1e-12 && exact_half, worst);
    }
    {
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const double chi = kTwoPi * k / 100.0;
            if (k == 50) continue;
            const IdentitySides s = scalar_identity_sides(chi);
            worst = std::max({worst, std::abs(prefactor_scale * s.lhs - std::sin(chi)), std::abs(s.rhs - std::sin(chi))});
        }
        report("scalar identity lhs = rhs = sin chi", worst < 1e-12, worst);
    }
    log << "selftest: " << (all_ok ? "ok" : "FAILED") << " in " << format_double(elapsed_ms(start)) << " ms\n";
    return all_ok ? kOk : kAcceptanceFailure;
}

}  // namespace wvb::cli

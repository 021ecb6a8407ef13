// wvb: simulate, analyze and verify weak-value commutator campaigns.

#include "wvb/cli.hpp"
#include "wvb/io.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Weak-value test of the qubit commutator: simulation and analysis"};
    app.set_version_flag("--version", wvb::cli::kToolVersion);
    app.require_subcommand(1);

    wvb::cli::SimulateArgs sim;
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic measurement campaign");
    simulate->add_option("--config", sim_config, "JSON run configuration (defaults if omitted)");
    simulate->add_option("--out", sim_out, "Output directory")->required();
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "Override the configured seed");
    simulate->add_flag("--noiseless", sim.noiseless, "Write expected counts instead of Poisson draws");
    simulate->add_flag("--single-file", sim.single_file, "One campaign.csv instead of one file per channel");

    wvb::cli::AnalyzeArgs ana;
    std::string ana_data, ana_out, ana_config;
    auto* analyze = app.add_subcommand("analyze", "Correct, fit and reconstruct weak values");
    analyze->add_option("data_dir", ana_data, "Campaign directory written by simulate")->required();
    analyze->add_option("--out", ana_out, "Output directory")->required();
    analyze->add_option("--config", ana_config, "Analysis configuration overriding the campaign's");

    wvb::cli::VerifyArgs ver;
    std::string ver_in, ver_out;
    double rms_bound = 0.0;
    auto* verify = app.add_subcommand("verify", "Assemble the commutator report from an analysis directory");
    verify->add_option("analysis_dir", ver_in, "Directory written by analyze")->required();
    verify->add_option("--out", ver_out, "Output directory")->required();
    auto* bound_opt = verify->add_option("--rms-bound", rms_bound, "Acceptance bound on RMS(lhs - rhs)");
    verify->add_flag("--theory-overlay", ver.theory_overlay, "Also write a dense sin(chi) curve");

    bool perturb = false;
    auto* selftest = app.add_subcommand("selftest", "Run the qubit-core oracle and identity checks");
    selftest->add_flag("--perturb-prefactor", perturb, "Negative control: scale the weak-value side by 1.01");

    auto* defaults = app.add_subcommand("default-config", "Print the default configuration as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wvb::cli::kConfigError;
    }

    if (*simulate) {
        if (!sim_config.empty()) sim.config = sim_config;
        sim.out_dir = sim_out;
        if (*seed_opt) sim.seed = sim_seed;
        return wvb::cli::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*analyze) {
        ana.data_dir = ana_data;
        ana.out_dir = ana_out;
        if (!ana_config.empty()) ana.config = ana_config;
        return wvb::cli::cmd_analyze(ana, std::cout, std::cerr);
    }
    if (*verify) {
        ver.analysis_dir = ver_in;
        ver.out_dir = ver_out;
        if (*bound_opt) ver.rms_bound = rms_bound;
        return wvb::cli::cmd_verify(ver, std::cout, std::cerr);
    }
    if (*selftest) return wvb::cli::cmd_selftest(std::cout, perturb ? 1.01 : 1.0);
    if (*defaults) {
        std::cout << wvb::to_json(wvb::RunConfig{}).dump(2) << '\n';
        return 0;
    }
    return wvb::cli::kConfigError;
}

#pragma once

// Command implementations behind the `wvb` executable. Exit codes are stable:
// 0 success, 1 acceptance failure, 2 config error, 3 IO error, 4 missing data.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace wvb::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kAcceptanceFailure = 1, kConfigError = 2, kIoError = 3, kMissingData = 4 };

struct SimulateArgs {
    std::optional<std::filesystem::path> config;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    bool noiseless = false;
    bool single_file = false;
    unsigned threads = 0;
};

struct AnalyzeArgs {
    std::filesystem::path data_dir;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> config;
};

struct VerifyArgs {
    std::filesystem::path analysis_dir;
    std::filesystem::path out_dir;
    std::optional<double> rms_bound;
    bool theory_overlay = false;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err);
int cmd_analyze(const AnalyzeArgs& args, std::ostream& log, std::ostream& err);
int cmd_verify(const VerifyArgs& args, std::ostream& log, std::ostream& err);
/// Oracle-equivalence and identity checks of the qubit core. `prefactor_scale` != 1
/// perturbs the weak-value side as a negative control.
int cmd_selftest(std::ostream& log, double prefactor_scale = 1.0);

}  // namespace wvb::cli

#pragma once

// File formats: JSON run configuration, dataset CSV, analysis CSVs and report.json.
// Floating-point output uses 17 significant digits.

#include "wvb/analysis.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace wvb {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kDatasetHeader = "chi_rad,channel,bin_center_s,counts,exposure";
inline constexpr const char* kWeakValuesHeader = "chi_rad,re,im,sigma_re,sigma_im,excluded";
inline constexpr const char* kCommutatorHeader = "chi_rad,lhs,sigma_lhs,rhs,sigma_rhs,theory";

struct RunConfig {
    ExperimentConfig experiment{};
    AnalysisOptions analysis{};
    /// alpha assumed by the analysis; unset means the simulated protocol alpha.
    std::optional<double> analysis_alpha;
    double rms_bound = 0.05;

    /// AnalysisOptions with omega, delta and alpha filled from the protocol.
    AnalysisOptions resolved_analysis() const;
};

std::string format_double(double v);

nlohmann::json to_json(const RunConfig& config);
/// Strict parse: unknown keys and wrong types raise ConfigError naming the field.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Parse errors report line and column; a run manifest's "config" entry is accepted too.
RunConfig load_run_config(const std::filesystem::path& path);

void write_datasets_csv(std::ostream& os, std::span<const BinnedCounts> data);
std::vector<BinnedCounts> read_datasets_csv(std::istream& is, const std::string& source = "<stream>");
/// Reads every *.csv with the dataset header in a directory.
std::vector<BinnedCounts> read_dataset_dir(const std::filesystem::path& dir);

void write_weak_values_csv(std::ostream& os, std::span<const WeakValueEstimate> wv);
std::vector<WeakValueEstimate> read_weak_values_csv(std::istream& is);

void write_postselection_csv(std::ostream& os, std::span<const PostselectionPoint> px,
                             std::span<const PostselectionPoint> py);
void read_postselection_csv(std::istream& is, std::vector<PostselectionPoint>& px,
                            std::vector<PostselectionPoint>& py);

void write_fits_csv(std::ostream& os, std::span<const ChiFit> raw, std::span<const ChiFit> corrected);
void write_corrected_csv(std::ostream& os, std::span<const TimeSeries> series);
void write_commutator_csv(std::ostream& os, const CommutatorReport& report);
/// Dense sin(chi) curve on [0, 2pi] for plotting.
void write_theory_curve_csv(std::ostream& os, std::size_t points = 361);

nlohmann::json to_json(const VisibilityEstimate& v);
VisibilityEstimate visibility_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CommutatorReport& report);

/// Writes via a temporary file and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace wvb

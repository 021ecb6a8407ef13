#pragma once

// Synthetic time-resolved detector data for a chi sweep: Poisson-noised,
// time-folded histograms for the RF-on signal and the reference channels.

#include "wvb/interferometer.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wvb {

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Channel { Modulated, EmptyX, EmptyY, Path1Only, Path2Only };

inline constexpr Channel kAllChannels[] = {Channel::Modulated, Channel::EmptyX, Channel::EmptyY,
                                           Channel::Path1Only, Channel::Path2Only};

std::string_view to_string(Channel c);
std::optional<Channel> channel_from_string(std::string_view s);

struct DatasetFlags {
    bool modulated = true;
    bool empty_x = true;
    bool empty_y = true;
    bool path1_only = true;
    bool path2_only = true;

    bool enabled(Channel c) const;
};

/// Equally spaced grid k * 2pi / n, k = 0..n-1.
std::vector<double> uniform_chi_grid(std::size_t n);

struct ExperimentConfig {
    ProtocolParams protocol{};  // protocol.chi is ignored; the sweep comes from chi_grid
    std::vector<double> chi_grid = uniform_chi_grid(12);
    int bins_per_period = 8;
    double counts_per_setting = 1.0e6;
    std::uint64_t seed = 20190517;
    DatasetFlags datasets{};
    /// Expected counts instead of Poisson draws.
    bool noiseless = false;
    /// Flat expected background per bin, in counts.
    double background_per_bin = 0.0;
    /// Raw detector bin width in seconds. 0 folds the full period into bins_per_period
    /// equal bins; a positive width uses floor(period / width) bins of that width and
    /// drops the remainder of each period.
    double detector_bin_s = 0.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    int effective_bins() const;
};

/// Time-folded histogram for one (chi, channel) setting.
struct BinnedCounts {
    double chi = 0.0;
    Channel channel = Channel::Modulated;
    std::vector<double> bin_centers;  // seconds within one RF period, strictly increasing
    std::vector<double> counts;       // integer-valued unless generated noiseless
    double exposure = 0.0;            // expected counts per bin for unit intensity

    double total() const;
};

/// Bin index of arrival time t folded into one RF period. Bins are half-open [lo, hi).
std::size_t fold_time(double t, double omega, int bins_per_period);

std::vector<double> bin_centers(const ExperimentConfig& config);
double bin_exposure(const ExperimentConfig& config);

/// Normalized intensity driving a channel at time t for the given chi.
double channel_intensity(Channel c, double t, double chi, const ProtocolParams& protocol);

/// Expected counts per bin (the Poisson means).
std::vector<double> expected_counts(const ExperimentConfig& config, double chi, Channel c);

/// One BinnedCounts per (chi, enabled channel), ordered by chi index then channel.
/// Deterministic in config.seed, independent of the thread count.
std::vector<BinnedCounts> generate_dataset(const ExperimentConfig& config, unsigned threads = 0);

/// Thread cap from WVB_THREADS, falling back to hardware concurrency.
unsigned default_thread_count();

}  // namespace wvb

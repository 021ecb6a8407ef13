#include "wvb/signal_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace wvb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::size_t chi_index, Channel c) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(chi_index));
    return splitmix64(h ^ (static_cast<std::uint64_t>(c) + 0x51ULL));
}

}  // namespace

std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::Modulated: return "modulated";
        case Channel::EmptyX: return "empty_x";
        case Channel::EmptyY: return "empty_y";
        case Channel::Path1Only: return "path1_only";
        case Channel::Path2Only: return "path2_only";
    }
    return "?";
}

std::optional<Channel> channel_from_string(std::string_view s) {
    for (Channel c : kAllChannels)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

bool DatasetFlags::enabled(Channel c) const {
    switch (c) {
        case Channel::Modulated: return modulated;
        case Channel::EmptyX: return empty_x;
        case Channel::EmptyY: return empty_y;
        case Channel::Path1Only: return path1_only;
        case Channel::Path2Only: return path2_only;
    }
    return false;
}

std::vector<double> uniform_chi_grid(std::size_t n) {
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    return grid;
}

void ExperimentConfig::validate() const {
    try {
        protocol.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("protocol", e.what());
    }
    if (chi_grid.empty()) throw ConfigError("chi_grid", "must contain at least one phase");
    for (double chi : chi_grid) {
        if (!(chi >= 0.0 && chi < kTwoPi)) {
            throw ConfigError("chi_grid", "value " + std::to_string(chi) + " outside [0, 2pi)");
        }
    }
    if (bins_per_period < 4) throw ConfigError("bins_per_period", "must be >= 4");
    if (!(counts_per_setting > 0.0) || !std::isfinite(counts_per_setting)) {
        throw ConfigError("counts_per_setting", "must be > 0");
    }
    if (!(background_per_bin >= 0.0) || !std::isfinite(background_per_bin)) {
        throw ConfigError("background_per_bin", "must be >= 0");
    }
    if (!(detector_bin_s >= 0.0) || !std::isfinite(detector_bin_s)) {
        throw ConfigError("detector_bin_s", "must be >= 0");
    }
    if (detector_bin_s > 0.0 && effective_bins() < 4) {
        throw ConfigError("detector_bin_s", "fewer than 4 full bins fit in one RF period");
    }
}

int ExperimentConfig::effective_bins() const {
    if (detector_bin_s > 0.0) {
        return static_cast<int>(std::floor(protocol.period() / detector_bin_s * (1.0 + 1e-12)));
    }
    return bins_per_period;
}

double BinnedCounts::total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
}

std::size_t fold_time(double t, double omega, int bins_per_period) {
    const double x = t * omega * static_cast<double>(bins_per_period);
    // Snap values within rounding distance of an edge onto it.
    const double nearest = std::round(x);
    const double snapped = std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x)) ? nearest : x;
    const double idx = std::floor(snapped);
    const double b = static_cast<double>(bins_per_period);
    double folded = std::fmod(idx, b);
    if (folded < 0.0) folded += b;
    return static_cast<std::size_t>(folded);
}

std::vector<double> bin_centers(const ExperimentConfig& config) {
    const int n = config.effective_bins();
    const double width =
        config.detector_bin_s > 0.0 ? config.detector_bin_s : config.protocol.period() / static_cast<double>(n);
    std::vector<double> centers(static_cast<std::size_t>(n));
    for (int b = 0; b < n; ++b) centers[static_cast<std::size_t>(b)] = (static_cast<double>(b) + 0.5) * width;
    return centers;
}

double bin_exposure(const ExperimentConfig& config) {
    const double width = config.detector_bin_s > 0.0
                             ? config.detector_bin_s
                             : config.protocol.period() / static_cast<double>(config.effective_bins());
    return config.counts_per_setting * width * config.protocol.omega;
}

double channel_intensity(Channel c, double t, double chi, const ProtocolParams& protocol) {
    ProtocolParams p = protocol;
    p.chi = chi;
    switch (c) {
        case Channel::Modulated: return real_intensity(t, p);
        case Channel::EmptyX: return empty_interferogram(chi, p.eta, 0.0);
        case Channel::EmptyY: return empty_interferogram(chi, p.eta, 0.5 * kPi);
        case Channel::Path1Only: return isolated_path_intensities(t, p).path1;
        case Channel::Path2Only: return isolated_path_intensities(t, p).path2;
    }
    return 0.0;
}

std::vector<double> expected_counts(const ExperimentConfig& config, double chi, Channel c) {
    const std::vector<double> centers = bin_centers(config);
    const double exposure = bin_exposure(config);
    std::vector<double> lambda(centers.size());
    for (std::size_t b = 0; b < centers.size(); ++b) {
        const double rate = std::max(0.0, channel_intensity(c, centers[b], chi, config.protocol));
        lambda[b] = rate * exposure + config.background_per_bin;
    }
    return lambda;
}

unsigned default_thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("WVB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) hw = std::min(hw, static_cast<unsigned>(v));
    }
    return hw;
}

std::vector<BinnedCounts> generate_dataset(const ExperimentConfig& config, unsigned threads) {
    config.validate();

    struct Job {
        std::size_t chi_index;
        Channel channel;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < config.chi_grid.size(); ++i)
        for (Channel c : kAllChannels)
            if (config.datasets.enabled(c)) jobs.push_back({i, c});

    const std::vector<double> centers = bin_centers(config);
    const double exposure = bin_exposure(config);
    std::vector<BinnedCounts> out(jobs.size());

    auto run = [&](std::size_t j) {
        const Job& job = jobs[j];
        const double chi = config.chi_grid[job.chi_index];
        BinnedCounts bc;
        bc.chi = chi;
        bc.channel = job.channel;
        bc.bin_centers = centers;
        bc.exposure = exposure;
        bc.counts = expected_counts(config, chi, job.channel);
        if (!config.noiseless) {
            std::mt19937_64 rng(substream_seed(config.seed, job.chi_index, job.channel));
            for (double& c : bc.counts) {
                if (c <= 0.0) {
                    c = 0.0;
                    continue;
                }
                std::poisson_distribution<long long> pois(c);
                c = static_cast<double>(pois(rng));
            }
        }
        out[j] = std::move(bc);
    };

    if (threads == 0) threads = default_thread_count();
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
    if (threads <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t j = w; j < jobs.size(); j += threads) run(j);
            });
        }
    }
    return out;
}

}  // namespace wvb

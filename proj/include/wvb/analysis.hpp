#pragma once

// Data reduction: visibility extraction, incoherence correction, known-frequency
// sinusoid fits, weak-value reconstruction with chi = 0 phase referencing, and the
// commutator check built from the reconstructed weak values.

#include "wvb/signal_gen.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

namespace wvb {

class DegenerateFit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class VisibilityZero : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class MissingReference : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ChannelMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Time series with explicit per-bin standard deviations.
struct TimeSeries {
    double chi = 0.0;
    std::vector<double> t;
    std::vector<double> values;
    std::vector<double> sigmas;
    double exposure = 0.0;
};

/// y(t) = offset + amplitude * sin(theta(t) - phase), theta = 2 pi omega t + delta.
///
/// The fit is linear in (offset, s, c) with y = offset + s sin(theta) + c cos(theta), so
/// amplitude = hypot(s, c) and phase = atan2(-c, s). `linear_covariance` is over
/// (offset, s, c); `covariance` is the same matrix mapped to (offset, amplitude, phase).
/// When amplitude == 0 the phase row and column are zero.
struct SinusoidFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
    double sin_coef = 0.0;
    double cos_coef = 0.0;
    Matrix3 covariance{};
    Matrix3 linear_covariance{};
    double reduced_chi2 = 0.0;
    std::size_t points = 0;

    double sigma_offset() const;
    double sigma_amplitude() const;
    double sigma_phase() const;
};

/// Weighted fit with Poisson variances max(counts, 1).
SinusoidFit fit_sinusoid(const BinnedCounts& data, double omega, double delta);
SinusoidFit fit_sinusoid(const TimeSeries& data, double omega, double delta);

struct FringePoint {
    double chi = 0.0;
    double intensity = 0.0;
    double sigma = 0.0;
};

struct VisibilityEstimate {
    double eta = 0.0;
    double sigma_eta = 0.0;
    double phase_offset = 0.0;  // phi0 in 1/2 (1 + eta cos(chi + phi0))
    double scale = 0.0;         // fitted mean intensity
    bool clamped = false;       // raw estimate fell outside [0, 1]
};

/// Scale-free fit of k/2 (1 + eta cos(chi + phi0)) to an RF-off phase scan.
VisibilityEstimate extract_visibility(std::span<const FringePoint> scan);

/// Per-chi normalized count ratio of a time-flat channel, counts / (bins * exposure).
FringePoint fringe_point(const BinnedCounts& data);

inline constexpr double kDefaultEtaMin = 0.05;

/// (I_real - (1 - eta)(I1 + I2)) / eta bin by bin, in counts of `measured`'s exposure.
/// Poisson variances are propagated in quadrature. Path channels with a different
/// exposure are rescaled to the measured one.
TimeSeries correct_intensity(const BinnedCounts& measured, const BinnedCounts& path1,
                             const BinnedCounts& path2, double eta, double eta_min = kDefaultEtaMin);

struct ErrorBudget {
    double stat_re = 0.0;
    double stat_im = 0.0;
    double sys_re = 0.0;
    double sys_im = 0.0;

    double sigma_re() const;
    double sigma_im() const;
};

struct ReconstructionOptions {
    double alpha = kDefaultAlpha;
    double alpha_sys_rel = 0.02;
    double p_min = 0.01;
    double reference_chi = 0.0;
};

/// Delta-method propagation for w = (s - i c) e^{-i phase_ref} / (offset * eta * alpha).
/// Statistical terms: fit covariance, eta uncertainty and reference-phase variance.
/// Systematic term: relative alpha uncertainty, which scales w linearly.
ErrorBudget propagate_errors(const SinusoidFit& fit, const VisibilityEstimate& eta, double alpha,
                             double alpha_sys_rel, double reference_phase = 0.0,
                             double reference_phase_variance = 0.0);

struct WeakValueEstimate {
    double chi = 0.0;
    double re = 0.0;
    double im = 0.0;
    double sigma_re = 0.0;
    double sigma_im = 0.0;
    double stat_re = 0.0;
    double stat_im = 0.0;
    double postselection_prob = 0.0;
    bool excluded = false;
};

struct ChiFit {
    double chi = 0.0;
    SinusoidFit fit;
    double exposure = 0.0;  // per-bin exposure of the fitted series
};

/// Amplitude A = amplitude/offset, |w| = A / (eta * alpha), arg w = phase - phase(reference_chi).
/// `residual_visibility` is the visibility still present in the fitted series (1 for
/// series already passed through correct_intensity). The post-selection probability is
/// read off the fitted offset, p = 2 offset / exposure; points below p_min are flagged
/// excluded. Throws MissingReference when the reference chi is absent or excluded.
std::vector<WeakValueEstimate> reconstruct_weak_value(std::span<const ChiFit> fits,
                                                      const VisibilityEstimate& residual_visibility,
                                                      const ReconstructionOptions& options);

struct PostselectionPoint {
    double chi = 0.0;
    double p = 0.0;
    double sigma = 0.0;
};

/// Visibility-corrected post-selection probability 1/2 (1 + (2 r - 1)/eta) from an
/// RF-off channel's normalized count ratio r.
PostselectionPoint estimate_postselection(const BinnedCounts& empty, const VisibilityEstimate& eta);

struct CommutatorRow {
    double chi = 0.0;
    double lhs = 0.0;
    double sigma_lhs = 0.0;
    double sigma_lhs_stat = 0.0;
    double rhs = 0.0;
    double sigma_rhs = 0.0;
    double theory = 0.0;
    bool excluded = false;
};

struct CommutatorSummary {
    double rms_residual = 0.0;
    double max_abs_residual = 0.0;
    std::size_t n_excluded = 0;
};

struct CommutatorReport {
    std::vector<CommutatorRow> rows;
    CommutatorSummary summary;
};

/// lhs = -4 p_x Im(w), rhs = 2 p_y - 1, theory = sin chi. Rows sorted by chi; the
/// summary runs over non-excluded rows. Throws ChannelMismatch when the three chi
/// grids differ.
CommutatorReport verify_commutator(std::span<const WeakValueEstimate> weak_values,
                                   std::span<const PostselectionPoint> px,
                                   std::span<const PostselectionPoint> py);

struct AnalysisOptions {
    ReconstructionOptions reconstruction{};
    double omega = kDefaultOmegaHz;
    double delta = 0.0;
    double eta_min = kDefaultEtaMin;
    /// Propagate the uncertainty of the measured visibility through the correction.
    bool propagate_eta = true;
};

struct CampaignAnalysis {
    VisibilityEstimate visibility;
    std::vector<ChiFit> raw_fits;
    std::vector<ChiFit> corrected_fits;
    std::vector<TimeSeries> corrected;
    std::vector<WeakValueEstimate> weak_values;
    std::vector<PostselectionPoint> px;
    std::vector<PostselectionPoint> py;
    CommutatorReport report;
};

/// Channels missing for at least one chi, by name.
std::vector<std::string> missing_channels(std::span<const BinnedCounts> data);

/// Full reduction of a campaign: eta from empty_x, correction, fits, reconstruction and
/// the commutator report. Throws ChannelMismatch when channels are missing.
CampaignAnalysis analyze_campaign(std::span<const BinnedCounts> data, const AnalysisOptions& options);

}  // namespace wvb

#include "wvb/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

namespace wvb {

namespace {

constexpr double kChiMatchTol = 1e-9;

double wrap_pi(double x) {
    double r = std::remainder(x, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

bool same_chi(double a, double b) { return std::abs(wrap_pi(a - b)) <= kChiMatchTol; }

Matrix3 to_array(const Eigen::Matrix3d& m) {
    Matrix3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return r;
}

struct LinearFit {
    Eigen::Vector3d params;
    Eigen::Matrix3d covariance;
    double chi2 = 0.0;
};

// Weighted least squares y ~ X p with per-point standard deviations.
LinearFit weighted_lsq(const Eigen::MatrixX3d& design, const Eigen::VectorXd& y, const Eigen::VectorXd& sigma) {
    const Eigen::VectorXd w = sigma.cwiseInverse();
    const Eigen::MatrixX3d xw = w.asDiagonal() * design;
    const Eigen::VectorXd yw = w.cwiseProduct(y);

    Eigen::ColPivHouseholderQR<Eigen::MatrixX3d> qr(xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw DegenerateFit("design matrix is rank-deficient");

    LinearFit fit;
    fit.params = qr.solve(yw);
    const Eigen::Matrix3d normal = xw.transpose() * xw;
    fit.covariance = normal.ldlt().solve(Eigen::Matrix3d::Identity());
    fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
    fit.chi2 = (xw * fit.params - yw).squaredNorm();
    return fit;
}

SinusoidFit fit_sinusoid_impl(std::span<const double> t, std::span<const double> y,
                              std::span<const double> sigma, double omega, double delta) {
    const std::size_t n = t.size();
    if (n < 4) throw DegenerateFit("sinusoid fit needs at least 4 bins");
    if (y.size() != n || sigma.size() != n) throw std::invalid_argument("fit_sinusoid: length mismatch");
    if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
        throw DegenerateFit("all bins are zero");
    }

    Eigen::MatrixX3d design(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sv(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]) || !std::isfinite(y[i])) {
            throw std::invalid_argument("fit_sinusoid: sigmas must be positive and values finite");
        }
        const double theta = kTwoPi * omega * t[i] + delta;
        const auto r = static_cast<Eigen::Index>(i);
        design(r, 0) = 1.0;
        design(r, 1) = std::sin(theta);
        design(r, 2) = std::cos(theta);
        yv(r) = y[i];
        sv(r) = sigma[i];
    }
    const LinearFit lin = weighted_lsq(design, yv, sv);

    SinusoidFit fit;
    fit.offset = lin.params(0);
    fit.sin_coef = lin.params(1);
    fit.cos_coef = lin.params(2);
    fit.amplitude = std::hypot(fit.sin_coef, fit.cos_coef);
    fit.phase = fit.amplitude > 0.0 ? std::atan2(-fit.cos_coef, fit.sin_coef) : 0.0;
    if (fit.phase <= -kPi) fit.phase = kPi;
    fit.linear_covariance = to_array(lin.covariance);
    fit.points = n;
    fit.reduced_chi2 = n > 3 ? lin.chi2 / static_cast<double>(n - 3) : 0.0;

    Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
    jac(0, 0) = 1.0;
    if (fit.amplitude > 0.0) {
        const double a = fit.amplitude;
        jac(1, 1) = fit.sin_coef / a;
        jac(1, 2) = fit.cos_coef / a;
        jac(2, 1) = fit.cos_coef / (a * a);
        jac(2, 2) = -fit.sin_coef / (a * a);
    }
    fit.covariance = to_array(jac * lin.covariance * jac.transpose());
    return fit;
}

}  // namespace

double SinusoidFit::sigma_offset() const { return std::sqrt(std::max(0.0, covariance[0][0])); }
double SinusoidFit::sigma_amplitude() const { return std::sqrt(std::max(0.0, covariance[1][1])); }
double SinusoidFit::sigma_phase() const { return std::sqrt(std::max(0.0, covariance[2][2])); }

SinusoidFit fit_sinusoid(const BinnedCounts& data, double omega, double delta) {
    std::vector<double> sigma(data.counts.size());
    std::transform(data.counts.begin(), data.counts.end(), sigma.begin(),
                   [](double c) { return std::sqrt(std::max(c, 1.0)); });
    return fit_sinusoid_impl(data.bin_centers, data.counts, sigma, omega, delta);
}

SinusoidFit fit_sinusoid(const TimeSeries& data, double omega, double delta) {
    return fit_sinusoid_impl(data.t, data.values, data.sigmas, omega, delta);
}

VisibilityEstimate extract_visibility(std::span<const FringePoint> scan) {
    std::vector<double> distinct;
    for (const auto& p : scan) {
        if (std::none_of(distinct.begin(), distinct.end(), [&](double c) { return same_chi(c, p.chi); })) {
            distinct.push_back(p.chi);
        }
    }
    if (distinct.size() < 3) throw DegenerateFit("visibility fit needs at least 3 distinct phases");

    const auto n = static_cast<Eigen::Index>(scan.size());
    Eigen::MatrixX3d design(n, 3);
    Eigen::VectorXd y(n), sigma(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const FringePoint& p = scan[static_cast<std::size_t>(i)];
        if (!(p.sigma > 0.0) || !std::isfinite(p.intensity)) {
            throw std::invalid_argument("extract_visibility: sigmas must be positive");
        }
        design(i, 0) = 1.0;
        design(i, 1) = std::cos(p.chi);
        design(i, 2) = std::sin(p.chi);
        y(i) = p.intensity;
        sigma(i) = p.sigma;
    }
    const LinearFit lin = weighted_lsq(design, y, sigma);
    const double a0 = lin.params(0);
    const double a1 = lin.params(1);
    const double a2 = lin.params(2);
    if (!(a0 > 0.0)) throw DegenerateFit("fringe mean is not positive");

    const double h = std::hypot(a1, a2);
    VisibilityEstimate est;
    est.scale = a0;
    est.eta = h / a0;
    est.phase_offset = h > 0.0 ? std::atan2(-a2, a1) : 0.0;

    Eigen::Vector3d grad;
    if (h > 0.0) {
        grad << -est.eta / a0, a1 / (h * a0), a2 / (h * a0);
        est.sigma_eta = std::sqrt(std::max(0.0, grad.dot(lin.covariance * grad)));
    } else {
        est.sigma_eta = std::sqrt(0.5 * (lin.covariance(1, 1) + lin.covariance(2, 2))) / a0;
    }
    if (est.eta > 1.0) {
        est.eta = 1.0;
        est.clamped = true;
    }
    return est;
}

FringePoint fringe_point(const BinnedCounts& data) {
    const double norm = static_cast<double>(data.counts.size()) * data.exposure;
    if (!(norm > 0.0)) throw std::invalid_argument("fringe_point: empty histogram or zero exposure");
    const double total = data.total();
    return {data.chi, total / norm, std::sqrt(std::max(total, 1.0)) / norm};
}

TimeSeries correct_intensity(const BinnedCounts& measured, const BinnedCounts& path1,
                             const BinnedCounts& path2, double eta, double eta_min) {
    if (!(eta > eta_min)) {
        throw VisibilityZero("visibility " + std::to_string(eta) + " at or below " + std::to_string(eta_min) +
                             ": correction is ill-conditioned");
    }
    if (eta > 1.0) throw std::invalid_argument("correct_intensity: eta must be <= 1");
    const std::size_t n = measured.counts.size();
    for (const BinnedCounts* p : {&path1, &path2}) {
        if (p->counts.size() != n || p->bin_centers.size() != n) {
            throw ChannelMismatch("correct_intensity: bin count mismatch");
        }
        for (std::size_t b = 0; b < n; ++b) {
            if (std::abs(p->bin_centers[b] - measured.bin_centers[b]) > 1e-9 * measured.bin_centers.back()) {
                throw ChannelMismatch("correct_intensity: bin centers are not aligned");
            }
        }
        if (!(p->exposure > 0.0)) throw ChannelMismatch("correct_intensity: path channel has zero exposure");
    }
    const double s1 = measured.exposure / path1.exposure;
    const double s2 = measured.exposure / path2.exposure;

    TimeSeries out;
    out.chi = measured.chi;
    out.t = measured.bin_centers;
    out.exposure = measured.exposure;
    out.values.resize(n);
    out.sigmas.resize(n);
    const double inc = 1.0 - eta;
    for (std::size_t b = 0; b < n; ++b) {
        const double m = measured.counts[b];
        const double p1 = path1.counts[b];
        const double p2 = path2.counts[b];
        out.values[b] = (m - inc * (s1 * p1 + s2 * p2)) / eta;
        const double var = std::max(m, 1.0) + inc * inc * (s1 * s1 * std::max(p1, 1.0) + s2 * s2 * std::max(p2, 1.0));
        out.sigmas[b] = std::sqrt(var) / eta;
    }
    return out;
}

double ErrorBudget::sigma_re() const { return std::hypot(stat_re, sys_re); }
double ErrorBudget::sigma_im() const { return std::hypot(stat_im, sys_im); }

ErrorBudget propagate_errors(const SinusoidFit& fit, const VisibilityEstimate& eta, double alpha,
                             double alpha_sys_rel, double reference_phase, double reference_phase_variance) {
    if (!(fit.offset != 0.0) || !(eta.eta > 0.0) || !(alpha > 0.0)) {
        throw std::invalid_argument("propagate_errors: offset, eta and alpha must be non-zero");
    }
    const double k = 1.0 / (fit.offset * eta.eta * alpha);
    const Complex rot = std::polar(1.0, -reference_phase);
    const Complex z = k * Complex(fit.sin_coef, -fit.cos_coef) * rot;

    // dz/d(offset, s, c)
    const std::array<Complex, 3> d_lin = {-z / fit.offset, k * rot, Complex(0.0, -1.0) * k * rot};
    double var_re = 0.0, var_im = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double cij = fit.linear_covariance[i][j];
            var_re += d_lin[i].real() * cij * d_lin[j].real();
            var_im += d_lin[i].imag() * cij * d_lin[j].imag();
        }
    const Complex d_eta = -z / eta.eta;
    var_re += d_eta.real() * d_eta.real() * eta.sigma_eta * eta.sigma_eta;
    var_im += d_eta.imag() * d_eta.imag() * eta.sigma_eta * eta.sigma_eta;
    const Complex d_ref = Complex(0.0, -1.0) * z;
    var_re += d_ref.real() * d_ref.real() * reference_phase_variance;
    var_im += d_ref.imag() * d_ref.imag() * reference_phase_variance;

    ErrorBudget budget;
    budget.stat_re = std::sqrt(std::max(0.0, var_re));
    budget.stat_im = std::sqrt(std::max(0.0, var_im));
    budget.sys_re = std::abs(z.real()) * alpha_sys_rel;
    budget.sys_im = std::abs(z.imag()) * alpha_sys_rel;
    return budget;
}

std::vector<WeakValueEstimate> reconstruct_weak_value(std::span<const ChiFit> fits,
                                                      const VisibilityEstimate& residual_visibility,
                                                      const ReconstructionOptions& options) {
    auto postselection = [](const ChiFit& f) {
        return f.exposure > 0.0 && f.fit.points > 0 ? 2.0 * f.fit.offset / f.exposure : 0.0;
    };

    const auto ref = std::find_if(fits.begin(), fits.end(),
                                  [&](const ChiFit& f) { return same_chi(f.chi, options.reference_chi); });
    if (ref == fits.end()) {
        throw MissingReference("reference phase chi=" + std::to_string(options.reference_chi) + " not in sweep");
    }
    if (postselection(*ref) < options.p_min) {
        throw MissingReference("reference point has post-selection probability below p_min");
    }
    const double ref_phase = ref->fit.phase;
    const double ref_var = ref->fit.covariance[2][2];

    std::vector<WeakValueEstimate> out;
    out.reserve(fits.size());
    for (const ChiFit& f : fits) {
        WeakValueEstimate est;
        est.chi = f.chi;
        est.postselection_prob = postselection(f);
        est.excluded = est.postselection_prob < options.p_min;
        if (f.fit.points == 0 || !(f.fit.offset > 0.0)) {
            est.excluded = true;
            out.push_back(est);
            continue;
        }
        const bool is_ref = &f == &*ref;
        const double phase = is_ref ? 0.0 : f.fit.phase - ref_phase;
        const double a_w = f.fit.amplitude / (f.fit.offset * residual_visibility.eta * options.alpha);
        est.re = a_w * std::cos(phase);
        est.im = a_w * std::sin(phase);
        // Rotating the linear coefficients by the reference phase reproduces (re, im).
        const ErrorBudget budget =
            propagate_errors(f.fit, residual_visibility, options.alpha, options.alpha_sys_rel,
                             is_ref ? f.fit.phase : ref_phase, is_ref ? 0.0 : ref_var);
        est.stat_re = budget.stat_re;
        est.stat_im = budget.stat_im;
        est.sigma_re = budget.sigma_re();
        est.sigma_im = budget.sigma_im();
        out.push_back(est);
    }
    return out;
}

PostselectionPoint estimate_postselection(const BinnedCounts& empty, const VisibilityEstimate& eta) {
    if (!(eta.eta > 0.0)) throw VisibilityZero("post-selection probability needs a non-zero visibility");
    const FringePoint r = fringe_point(empty);
    const double contrast = 2.0 * r.intensity - 1.0;
    PostselectionPoint out;
    out.chi = empty.chi;
    out.p = 0.5 * (1.0 + contrast / eta.eta);
    const double d_r = 1.0 / eta.eta;
    const double d_eta = -contrast / (2.0 * eta.eta * eta.eta);
    out.sigma = std::hypot(d_r * r.sigma, d_eta * eta.sigma_eta);
    return out;
}

CommutatorReport verify_commutator(std::span<const WeakValueEstimate> weak_values,
                                   std::span<const PostselectionPoint> px,
                                   std::span<const PostselectionPoint> py) {
    if (weak_values.size() != px.size() || weak_values.size() != py.size()) {
        throw ChannelMismatch("chi grids differ in length across weak-value, empty_x and empty_y inputs");
    }
    std::vector<WeakValueEstimate> wv(weak_values.begin(), weak_values.end());
    std::vector<PostselectionPoint> x(px.begin(), px.end());
    std::vector<PostselectionPoint> y(py.begin(), py.end());
    auto by_chi = [](const auto& a, const auto& b) { return a.chi < b.chi; };
    std::sort(wv.begin(), wv.end(), by_chi);
    std::sort(x.begin(), x.end(), by_chi);
    std::sort(y.begin(), y.end(), by_chi);

    CommutatorReport report;
    double sum_sq = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < wv.size(); ++i) {
        if (!same_chi(wv[i].chi, x[i].chi) || !same_chi(wv[i].chi, y[i].chi)) {
            throw ChannelMismatch("chi grids differ at chi=" + std::to_string(wv[i].chi));
        }
        CommutatorRow row;
        row.chi = wv[i].chi;
        row.theory = std::sin(row.chi);
        row.rhs = 2.0 * y[i].p - 1.0;
        row.sigma_rhs = 2.0 * y[i].sigma;
        row.excluded = wv[i].excluded;
        if (row.excluded) {
            ++report.summary.n_excluded;
        } else {
            row.lhs = -4.0 * x[i].p * wv[i].im;
            row.sigma_lhs = 4.0 * std::hypot(wv[i].im * x[i].sigma, x[i].p * wv[i].sigma_im);
            row.sigma_lhs_stat = 4.0 * std::hypot(wv[i].im * x[i].sigma, x[i].p * wv[i].stat_im);
            const double r = row.lhs - row.rhs;
            sum_sq += r * r;
            report.summary.max_abs_residual = std::max(report.summary.max_abs_residual, std::abs(r));
            ++used;
        }
        report.rows.push_back(row);
    }
    report.summary.rms_residual = used > 0 ? std::sqrt(sum_sq / static_cast<double>(used)) : 0.0;
    return report;
}

std::vector<std::string> missing_channels(std::span<const BinnedCounts> data) {
    std::vector<double> chis;
    for (const auto& d : data)
        if (std::none_of(chis.begin(), chis.end(), [&](double c) { return same_chi(c, d.chi); }))
            chis.push_back(d.chi);
    std::vector<std::string> missing;
    for (Channel c : kAllChannels) {
        bool complete = !chis.empty();
        for (double chi : chis) {
            const bool found = std::any_of(data.begin(), data.end(), [&](const BinnedCounts& d) {
                return d.channel == c && same_chi(d.chi, chi);
            });
            complete = complete && found;
        }
        if (!complete) missing.emplace_back(to_string(c));
    }
    return missing;
}

namespace {

struct ChiGroup {
    double chi = 0.0;
    std::map<Channel, const BinnedCounts*> channels;
};

std::vector<ChiGroup> group_by_chi(std::span<const BinnedCounts> data) {
    std::vector<ChiGroup> groups;
    for (const auto& d : data) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const ChiGroup& g) { return same_chi(g.chi, d.chi); });
        if (it == groups.end()) {
            groups.push_back({d.chi, {}});
            it = std::prev(groups.end());
        }
        it->channels[d.channel] = &d;
    }
    std::sort(groups.begin(), groups.end(), [](const ChiGroup& a, const ChiGroup& b) { return a.chi < b.chi; });
    return groups;
}

std::vector<ChiFit> corrected_fits(const std::vector<ChiGroup>& groups, double eta, const AnalysisOptions& options,
                                   std::vector<TimeSeries>* series_out) {
    std::vector<ChiFit> fits;
    for (const ChiGroup& g : groups) {
        TimeSeries ts = correct_intensity(*g.channels.at(Channel::Modulated), *g.channels.at(Channel::Path1Only),
                                          *g.channels.at(Channel::Path2Only), eta, options.eta_min);
        ChiFit cf;
        cf.chi = g.chi;
        cf.exposure = ts.exposure;
        try {
            cf.fit = fit_sinusoid(ts, options.omega, options.delta);
        } catch (const DegenerateFit&) {
            cf.fit = SinusoidFit{};
        }
        fits.push_back(cf);
        if (series_out) series_out->push_back(std::move(ts));
    }
    return fits;
}

}  // namespace

CampaignAnalysis analyze_campaign(std::span<const BinnedCounts> data, const AnalysisOptions& options) {
    if (const auto missing = missing_channels(data); !missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ChannelMismatch("missing channels: " + list);
    }
    const std::vector<ChiGroup> groups = group_by_chi(data);

    CampaignAnalysis result;
    std::vector<FringePoint> scan;
    for (const ChiGroup& g : groups) scan.push_back(fringe_point(*g.channels.at(Channel::EmptyX)));
    result.visibility = extract_visibility(scan);

    for (const ChiGroup& g : groups) {
        ChiFit cf;
        cf.chi = g.chi;
        const BinnedCounts& mod = *g.channels.at(Channel::Modulated);
        cf.exposure = mod.exposure;
        try {
            cf.fit = fit_sinusoid(mod, options.omega, options.delta);
        } catch (const DegenerateFit&) {
            cf.fit = SinusoidFit{};
        }
        result.raw_fits.push_back(cf);
    }

    result.corrected_fits = corrected_fits(groups, result.visibility.eta, options, &result.corrected);
    const VisibilityEstimate restored{1.0, 0.0, 0.0, 1.0, false};
    result.weak_values = reconstruct_weak_value(result.corrected_fits, restored, options.reconstruction);

    const double eta_shifted = std::min(1.0, result.visibility.eta + result.visibility.sigma_eta);
    if (options.propagate_eta && eta_shifted > result.visibility.eta) {
        const double scale = result.visibility.sigma_eta / (eta_shifted - result.visibility.eta);
        const auto shifted_fits = corrected_fits(groups, eta_shifted, options, nullptr);
        const auto shifted = reconstruct_weak_value(shifted_fits, restored, options.reconstruction);
        for (std::size_t i = 0; i < result.weak_values.size(); ++i) {
            WeakValueEstimate& w = result.weak_values[i];
            if (w.excluded || shifted[i].excluded) continue;
            const double d_re = scale * (shifted[i].re - w.re);
            const double d_im = scale * (shifted[i].im - w.im);
            w.stat_re = std::hypot(w.stat_re, d_re);
            w.stat_im = std::hypot(w.stat_im, d_im);
            w.sigma_re = std::hypot(w.sigma_re, d_re);
            w.sigma_im = std::hypot(w.sigma_im, d_im);
        }
    }

    for (const ChiGroup& g : groups) {
        result.px.push_back(estimate_postselection(*g.channels.at(Channel::EmptyX), result.visibility));
        result.py.push_back(estimate_postselection(*g.channels.at(Channel::EmptyY), result.visibility));
    }
    result.report = verify_commutator(result.weak_values, result.px, result.py);
    return result;
}

}  // namespace wvb

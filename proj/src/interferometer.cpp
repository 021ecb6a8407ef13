#include "wvb/interferometer.hpp"

#include <cmath>
#include <stdexcept>

namespace wvb {

namespace {
constexpr Complex kI{0.0, 1.0};
}

void ProtocolParams::validate() const {
    if (!std::isfinite(chi)) throw std::invalid_argument("chi: must be finite");
    if (!(alpha >= 0.0 && alpha < kPi)) throw std::invalid_argument("alpha: must lie in [0, pi)");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("omega: must be > 0");
    if (!std::isfinite(delta)) throw std::invalid_argument("delta: must be finite");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta: must lie in [0, 1]");
}

std::string_view to_string(SpinChannel c) {
    switch (c) {
        case SpinChannel::UpX: return "up_x";
        case SpinChannel::DownX: return "down_x";
        case SpinChannel::UpY: return "up_y";
        case SpinChannel::DownY: return "down_y";
        case SpinChannel::UpZ: return "up_z";
        case SpinChannel::DownZ: return "down_z";
    }
    return "?";
}

QubitState analyzer_state(SpinChannel c) {
    switch (c) {
        case SpinChannel::UpX: return QubitState::plus_x();
        case SpinChannel::DownX: return QubitState::minus_x();
        case SpinChannel::UpY: return QubitState::plus_y();
        case SpinChannel::DownY: return QubitState::minus_y();
        case SpinChannel::UpZ: return QubitState::plus_z();
        case SpinChannel::DownZ: return QubitState::minus_z();
    }
    throw std::invalid_argument("analyzer_state: unknown channel");
}

double rf_phase(double t, const ProtocolParams& p) { return kTwoPi * p.omega * t + p.delta; }

QubitState preselect(double chi) { return QubitState::equal_superposition(chi); }

Operator2 rf_unitary(double t, const ProtocolParams& p) {
    const double theta = rf_phase(t, p);
    const double c = std::cos(0.5 * p.alpha);
    const double s = std::sin(0.5 * p.alpha);
    return {c, kI * s * std::polar(1.0, theta), kI * s * std::polar(1.0, -theta), c};
}

Operator4 interaction_unitary(double t, const ProtocolParams& p) {
    const Operator2 pi1 = projector_from_state(QubitState::plus_z());
    const Operator2 pi2 = projector_from_state(QubitState::minus_z());
    return tensor(pi1, rf_unitary(t, p)) + tensor(pi2, pauli::identity());
}

State4 analyzed_state(double t, const ProtocolParams& p, SpinChannel channel) {
    const State4 in = tensor(preselect(p.chi), QubitState::plus_z());
    const Operator4 post = tensor(projector_from_state(QubitState::plus_x()), pauli::identity());
    const Operator4 spin = tensor(pauli::identity(), projector_from_state(analyzer_state(channel)));
    return apply(spin * post * interaction_unitary(t, p), in);
}

double exact_intensity(double t, const ProtocolParams& p, SpinChannel channel) {
    return norm_squared(analyzed_state(t, p, channel));
}

Complex path_weak_value(double chi, double epsilon) {
    return weak_value(preselect(chi), QubitState::plus_x(), projector_from_state(QubitState::plus_z()),
                      epsilon)
        .value;
}

double postselection_probability_x(double chi) { return 0.5 * (1.0 + std::cos(chi)); }
double postselection_probability_y(double chi) { return 0.5 * (1.0 + std::sin(chi)); }

double ideal_intensity(double t, const ProtocolParams& p) {
    const double theta = rf_phase(t, p);
    const double half_p = 0.5 * postselection_probability_x(p.chi);
    // (1/2) p w = (1 + e^{-i chi}) / 8
    const Complex half_p_w = (1.0 + std::polar(1.0, -p.chi)) / 8.0;
    return half_p - p.alpha * (half_p_w * std::polar(1.0, -theta)).imag();
}

PathIntensities isolated_path_intensities(double t, const ProtocolParams& p) {
    return {0.125 * (1.0 + p.alpha * std::sin(rf_phase(t, p))), 0.125};
}

double real_intensity(double t, const ProtocolParams& p) {
    return p.eta * ideal_intensity(t, p) + (1.0 - p.eta) * isolated_path_intensities(t, p).sum();
}

double empty_interferogram(double chi, double eta, double extra_phase) {
    return 0.5 * (1.0 + eta * std::cos(chi - extra_phase));
}

}  // namespace wvb

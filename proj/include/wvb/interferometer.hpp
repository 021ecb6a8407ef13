#pragma once

// Forward model of the three-plate interferometer protocol: path pre-selection,
// RF spin coupling in path I, post-selection on |+x> and spin analysis in the O beam.
//
// Time enters only through the RF phase theta(t) = 2*pi*omega*t + delta, with omega an
// ordinary frequency in Hz.

#include "wvb/qubit_core.hpp"

#include <string_view>

namespace wvb {

inline constexpr double kDefaultAlpha = kPi / 9.0;
inline constexpr double kDefaultOmegaHz = 60.0e3;
inline constexpr double kDefaultEta = 0.79;

struct ProtocolParams {
    double chi = 0.0;
    double alpha = kDefaultAlpha;
    double omega = kDefaultOmegaHz;
    double delta = 0.0;
    double eta = kDefaultEta;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    double period() const { return 1.0 / omega; }
};

enum class SpinChannel { UpX, DownX, UpY, DownY, UpZ, DownZ };

std::string_view to_string(SpinChannel c);
QubitState analyzer_state(SpinChannel c);

/// 2*pi*omega*t + delta
double rf_phase(double t, const ProtocolParams& p);

/// (|I> + e^{i chi}|II>)/sqrt(2)
QubitState preselect(double chi);

/// Spin rotation of the RF flipper:
///   [[cos(a/2),               i sin(a/2) e^{+i theta}],
///    [i sin(a/2) e^{-i theta}, cos(a/2)              ]]
Operator2 rf_unitary(double t, const ProtocolParams& p);

/// Pi_1 (x) U_RF(t) + Pi_2 (x) 1
Operator4 interaction_unitary(double t, const ProtocolParams& p);

/// Joint state after coupling, path post-selection on |+x> and spin projection.
State4 analyzed_state(double t, const ProtocolParams& p, SpinChannel channel);

/// |P_spin (|+x><+x| (x) 1) U_int(t) (|psi_i(chi)> (x) |up_z>)|^2, no small-alpha truncation.
double exact_intensity(double t, const ProtocolParams& p, SpinChannel channel = SpinChannel::UpX);

/// <Pi_1>_w for pre = psi_i(chi), post = |+x>; equals 1/(1 + e^{i chi}).
Complex path_weak_value(double chi, double epsilon = kDefaultPostselectionEpsilon);

/// |<+x|psi_i(chi)>|^2 = (1 + cos chi)/2
double postselection_probability_x(double chi);
/// |<+y|psi_i(chi)>|^2 = (1 + sin chi)/2
double postselection_probability_y(double chi);

/// First-order (in alpha) O-detector intensity with the up_x analyzer:
///   I(t) = 1/2 p (1 + alpha |w| sin(theta - arg w)) = 1/2 p (1 - alpha Im(w e^{-i theta})).
/// Written through (1/2) p w = (1 + e^{-i chi})/8, so it stays finite at chi = pi where it
/// vanishes identically.
double ideal_intensity(double t, const ProtocolParams& p);

struct PathIntensities {
    double path1 = 0.0;
    double path2 = 0.0;
    double sum() const { return path1 + path2; }
};

/// Isolated-path intensities (1/8 (1 + alpha sin theta), 1/8).
PathIntensities isolated_path_intensities(double t, const ProtocolParams& p);

/// eta * ideal + (1 - eta) * (I1 + I2)
double real_intensity(double t, const ProtocolParams& p);

/// Normalized RF-off interferogram 1/2 (1 + eta cos(chi - extra_phase)).
/// extra_phase = 0 follows |<+x|psi_i>|^2, extra_phase = pi/2 follows |<+y|psi_i>|^2.
double empty_interferogram(double chi, double eta, double extra_phase);

}  // namespace wvb

#pragma once

// Parametric synchronization / stability certificates and the drooped
// steady-state prediction.

#include "dvoc/dynamics.hpp"
#include "dvoc/netmodel.hpp"
#include "dvoc/spectral.hpp"

#include <optional>
#include <string>

namespace dvoc {

struct OperatingEnvelope {
    double delta_bar = kPi / 6;  // maximal phase difference, [0, pi/2)
    double gamma_bar = 0.2;      // maximal amplitude-ratio deviation, (0, 1)

    void validate() const;
    /// ((1 + cos delta_bar) / 2) (1 - gamma_bar)^2
    double factor() const;
};

struct SteadyStatePrediction {
    double omega_sync = 0.0;       // Im(lambda1)
    double amplitude_scale = 0.0;  // sqrt(1 + Re(lambda1)/(eta alpha))
    RVector v_ss;
    Complex varpi_sync;  // lambda1
};

struct StabilityCertificate {
    SpectralReport spectral;
    double lambda2_connectivity = 0.0;
    double lambda2_second_largest = 0.0;
    double lhs_sync = 0.0;
    double rhs = 0.0;
    bool condition1 = false;
    bool condition3 = false;
    double margin_c = 0.0;
    std::optional<double> alpha1;
    double shifted_norm = 0.0;  // ||A - lambda1 I||
    double delta_actual = 0.0;
    double gamma_actual = 0.0;
    bool envelope_ok = false;
    bool setpoints_consistent = false;
    std::optional<SteadyStatePrediction> predicted;
    std::string prediction_error;
};

/// Max pairwise relative deviation of v*_l/v*_k from |phi_l|/|phi_k|.
double setpoint_ratio_error(const RVector& v_star, const CVector& phi1);

inline constexpr double kConsistencyTol = 1e-9;

/// Fills the spectral data, lhs/rhs, condition1 and the achieved envelope.
StabilityCertificate check_condition1(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env);

/// Full certificate: everything from check_condition1 plus condition3, c,
/// alpha1 and (when well posed) the steady-state prediction.
StabilityCertificate check_condition3(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env);

struct ReferenceNode {
    std::size_t node = 0;
    double v_ref = 1.0;
};

/// v*_k = v_ref |phi_k| / |phi_ref|.
RVector consistent_setpoints(const CVector& phi1, const ReferenceNode& ref);

/// Throws InconsistentSetpoints or IllPosedAmplitude.
SteadyStatePrediction predict_steady_state(const SpectralReport& report, const Setpoints& sp,
                                           const ControlGains& gains);

/// Replaces v* with the ratio-consistent vector for the given network while
/// keeping the normalized power setpoints fixed (p*, q* are rescaled by
/// v*_k^2). The provisional v* used to normalize p*, q* is v_ref on all nodes.
Setpoints make_consistent(const NetworkModel& net, const RVector& p_star, const RVector& q_star,
                          const ControlGains& gains, const ReferenceNode& ref);

}  // namespace dvoc

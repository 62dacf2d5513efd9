#pragma once

// dVOC node dynamics over the reduced network, power-flow evaluation and the
// complex-angle / complex-frequency coordinates.

#include "dvoc/netmodel.hpp"
#include "dvoc/types.hpp"

#include <optional>

namespace dvoc {

struct ControlGains {
    double eta = 1.0;     // synchronization gain, > 0
    double alpha = 0.0;   // voltage-regulation gain, >= 0 (0 = auxiliary linear system)
    double omega0 = 0.0;  // nominal angular frequency, rad/s
    double phi = 0.0;     // rotation angle in [0, pi/2]

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

struct Setpoints {
    RVector p_star;
    RVector q_star;
    RVector v_star;  // strictly positive

    std::size_t size() const { return static_cast<std::size_t>(v_star.size()); }
    void validate() const;
};

/// Entries (p*_k - j q*_k) / v*_k^2.
struct NormalizedPowerSetpoints {
    CVector sigma_star_conj;
};

/// A = j omega0 I + eta e^{j phi} (K - Y) with K = diag(sigma*) - diag(shunts).
struct SystemMatrix {
    CMatrix A;
    ControlGains gains;
    CVector k_diag;

    std::size_t size() const { return static_cast<std::size_t>(A.rows()); }
};

/// theta_c_k = ln|v_k| + j theta_k, theta_k unwrapped.
struct ComplexAngleState {
    CVector theta_c;
};

struct PowerFlow {
    CVector s;           // s_k = sum_l conj(y_kl) v_k conj(v_l)
    CVector sigma_conj;  // conj(s_k) / |v_k|^2
};

NormalizedPowerSetpoints normalize_setpoints(const Setpoints& sp);

SystemMatrix build_system_matrix(const NetworkModel& net, const NormalizedPowerSetpoints& sp,
                                 const ControlGains& gains);

/// Voltage regulation error Phi_k = (v*_k^2 - |v_k|^2) / v*_k^2.
RVector regulation_error(const CVector& v, const RVector& v_star);

/// A v + eta alpha Phi(v) v.
CVector dvoc_rhs(const CVector& v, const SystemMatrix& sys, const Setpoints& sp);

/// Checks rhs(e^{j psi} v) == e^{j psi} rhs(v) to 1e-12 relative.
bool rotational_symmetry_check(const SystemMatrix& sys, const Setpoints& sp, const CVector& v,
                               double psi);

/// Power flow with the physical admittance Y + diag(shunts). `sigma_conj` is
/// only filled when every v_k is nonzero (ZeroVoltage otherwise).
PowerFlow power_flow(const CVector& v, const NetworkModel& net);

/// Normalized power through the voltage-ratio form sum_l y_kl v_l / v_k.
CVector normalized_power_ratio_form(const CVector& v, const NetworkModel& net);

ComplexAngleState to_complex_angle(const CVector& v,
                                   const std::optional<ComplexAngleState>& prev = std::nullopt);

/// varpi_k = vdot_k / v_k from the analytic right-hand side.
CVector complex_frequency(const CVector& v, const SystemMatrix& sys, const Setpoints& sp);

/// Complex droop form: j omega0 + eta e^{j phi}(sigma*_k - sigma_k(v)) + eta alpha Phi_k.
CVector complex_droop_frequency(const CVector& v, const NetworkModel& net,
                                const NormalizedPowerSetpoints& nsp, const Setpoints& sp,
                                const ControlGains& gains);

}  // namespace dvoc

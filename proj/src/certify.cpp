#include "dvoc/certify.hpp"

#include "dvoc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dvoc {

void OperatingEnvelope::validate() const {
    if (!(delta_bar >= 0.0 && delta_bar < kPi / 2)) {
        throw Error(ErrorCode::InvalidArgument, "envelope.delta_bar must lie in [0, pi/2)");
    }
    if (!(gamma_bar > 0.0 && gamma_bar < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "envelope.gamma_bar must lie in (0, 1)");
    }
}

double OperatingEnvelope::factor() const {
    const double shrink = 1.0 - gamma_bar;
    return 0.5 * (1.0 + std::cos(delta_bar)) * shrink * shrink;
}

double setpoint_ratio_error(const RVector& v_star, const CVector& phi1) {
    if (v_star.size() != phi1.size()) {
        throw Error(ErrorCode::DimensionMismatch, "setpoints and eigenvector differ in size");
    }
    double worst = 0.0;
    for (Eigen::Index k = 0; k < v_star.size(); ++k) {
        for (Eigen::Index l = 0; l < v_star.size(); ++l) {
            const double want = std::abs(phi1(l)) / std::abs(phi1(k));
            const double got = v_star(l) / v_star(k);
            worst = std::max(worst, std::abs(got / want - 1.0));
        }
    }
    return std::isnan(worst) ? std::numeric_limits<double>::infinity() : worst;
}

StabilityCertificate check_condition1(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env) {
    gains.validate();
    env.validate();
    const NormalizedPowerSetpoints nsp = normalize_setpoints(sp);
    const SystemMatrix sys = build_system_matrix(net, nsp, gains);

    StabilityCertificate cert;
    cert.spectral = analyze(sys);

    const ConnectivityReading conn = rotated_connectivity_both(net, gains.phi);
    cert.lambda2_connectivity = rotated_connectivity(net, gains.phi);
    cert.lambda2_second_largest = conn.second_largest;

    const Complex rot = std::polar(1.0, gains.phi);
    cert.lhs_sync = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < sys.k_diag.size(); ++k) {
        cert.lhs_sync = std::max(cert.lhs_sync, (rot * sys.k_diag(k)).real());
    }
    cert.rhs = env.factor() * cert.lambda2_connectivity;
    cert.condition1 = cert.lhs_sync < cert.rhs;

    const CVector& phi = cert.spectral.phi1;
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
        for (Eigen::Index l = 0; l < phi.size(); ++l) {
            cert.delta_actual = std::max(cert.delta_actual, std::abs(std::arg(phi(k) / phi(l))));
            cert.gamma_actual =
                std::max(cert.gamma_actual, std::abs(std::abs(phi(k)) / std::abs(phi(l)) - 1.0));
        }
    }
    if (std::isnan(cert.delta_actual) || std::isnan(cert.gamma_actual)) {
        cert.delta_actual = cert.gamma_actual = std::numeric_limits<double>::infinity();
    }
    cert.envelope_ok = cert.delta_actual <= env.delta_bar && cert.gamma_actual <= env.gamma_bar;
    cert.setpoints_consistent = setpoint_ratio_error(sp.v_star, phi) <= kConsistencyTol;
    cert.shifted_norm = shifted_norm(sys.A, cert.spectral.lambda1);
    return cert;
}

StabilityCertificate check_condition3(const NetworkModel& net, const Setpoints& sp,
                                      const ControlGains& gains, const OperatingEnvelope& env) {
    StabilityCertificate cert = check_condition1(net, sp, gains, env);
    cert.condition3 = cert.lhs_sync + gains.alpha < cert.rhs;
    cert.margin_c = cert.rhs - cert.lhs_sync - gains.alpha;
    if (cert.margin_c > 0.0) {
        cert.alpha1 = gains.eta * cert.margin_c / (5.0 * cert.shifted_norm * cert.shifted_norm);
    }
    try {
        cert.predicted = predict_steady_state(cert.spectral, sp, gains);
    } catch (const Error& e) {
        cert.prediction_error = e.what();
    }
    return cert;
}

RVector consistent_setpoints(const CVector& phi1, const ReferenceNode& ref) {
    const Eigen::Index n = phi1.size();
    if (ref.node >= static_cast<std::size_t>(n)) {
        throw Error(ErrorCode::InvalidArgument, "reference node out of range");
    }
    if (!(ref.v_ref > 0.0)) {
        throw Error(ErrorCode::ZeroVoltageSetpoint, "reference voltage must be positive");
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(std::abs(phi1(k)) > 0.0)) {
            throw Error(ErrorCode::ZeroEigenvectorEntry,
                        "dominant eigenvector entry " + std::to_string(k) + " is zero");
        }
    }
    const double base = std::abs(phi1(static_cast<Eigen::Index>(ref.node)));
    RVector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = ref.v_ref * std::abs(phi1(k)) / base;
    return v;
}

SteadyStatePrediction predict_steady_state(const SpectralReport& report, const Setpoints& sp,
                                           const ControlGains& gains) {
    const double err = setpoint_ratio_error(sp.v_star, report.phi1);
    if (!(err <= kConsistencyTol)) {
        throw Error(ErrorCode::InconsistentSetpoints,
                    "voltage setpoint ratios deviate from the dominant mode by " +
                        std::to_string(err));
    }
    const double gain = gains.eta * gains.alpha;
    const double ratio = gain > 0.0 ? 1.0 + report.lambda1.real() / gain : -1.0;
    if (!(ratio > 0.0)) {
        throw Error(ErrorCode::IllPosedAmplitude,
                    gain > 0.0 ? "1 + Re(lambda1)/(eta alpha) is not positive"
                               : "amplitude regulation is disabled (alpha = 0)");
    }
    SteadyStatePrediction out;
    out.omega_sync = report.lambda1.imag();
    out.amplitude_scale = std::sqrt(ratio);
    out.v_ss = sp.v_star * out.amplitude_scale;
    out.varpi_sync = report.lambda1;
    return out;
}

Setpoints make_consistent(const NetworkModel& net, const RVector& p_star, const RVector& q_star,
                          const ControlGains& gains, const ReferenceNode& ref) {
    const auto n = static_cast<Eigen::Index>(net.size());
    Setpoints provisional{p_star, q_star, RVector::Constant(n, ref.v_ref)};
    const NormalizedPowerSetpoints nsp = normalize_setpoints(provisional);
    const SpectralReport rep = analyze(build_system_matrix(net, nsp, gains));

    Setpoints out;
    out.v_star = consistent_setpoints(rep.phi1, ref);
    out.p_star.resize(n);
    out.q_star.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v2 = out.v_star(k) * out.v_star(k);
        out.p_star(k) = nsp.sigma_star_conj(k).real() * v2;
        out.q_star(k) = -nsp.sigma_star_conj(k).imag() * v2;
    }
    return out;
}

}  // namespace dvoc

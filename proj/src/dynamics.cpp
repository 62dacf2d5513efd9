#include "dvoc/dynamics.hpp"

#include "dvoc/error.hpp"

#include <cmath>
#include <string>

namespace dvoc {

namespace {

void require_nonzero(const CVector& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (v(k) == Complex(0.0, 0.0)) {
            throw Error(ErrorCode::ZeroVoltage, "voltage at node " + std::to_string(k) + " is zero");
        }
    }
}

void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has size " +
                                                      std::to_string(got) + ", expected " +
                                                      std::to_string(want));
    }
}

}  // namespace

void ControlGains::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw Error(ErrorCode::InvalidArgument, "gains.eta must be positive");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::InvalidArgument, "gains.alpha must be nonnegative");
    }
    if (!std::isfinite(omega0)) {
        throw Error(ErrorCode::InvalidArgument, "gains.omega0 must be finite");
    }
    if (!(phi >= 0.0 && phi <= kPi / 2)) {
        throw Error(ErrorCode::InvalidArgument, "gains.phi must lie in [0, pi/2]");
    }
}

void Setpoints::validate() const {
    if (p_star.size() != v_star.size() || q_star.size() != v_star.size()) {
        throw Error(ErrorCode::DimensionMismatch, "setpoint vectors differ in length");
    }
    for (Eigen::Index k = 0; k < v_star.size(); ++k) {
        if (!(v_star(k) > 0.0)) {
            throw Error(ErrorCode::ZeroVoltageSetpoint,
                        "v_star[" + std::to_string(k) + "] must be positive");
        }
    }
}

NormalizedPowerSetpoints normalize_setpoints(const Setpoints& sp) {
    sp.validate();
    const Eigen::Index n = sp.v_star.size();
    CVector sigma(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v2 = sp.v_star(k) * sp.v_star(k);
        sigma(k) = Complex(sp.p_star(k), -sp.q_star(k)) / v2;
    }
    return {sigma};
}

SystemMatrix build_system_matrix(const NetworkModel& net, const NormalizedPowerSetpoints& sp,
                                 const ControlGains& gains) {
    const auto n = static_cast<Eigen::Index>(net.size());
    require_size(sp.sigma_star_conj.size(), n, "normalized setpoints");
    require_size(net.shunts.size(), n, "shunt vector");

    const CVector k_diag = sp.sigma_star_conj - net.shunts;
    const Complex coupling = gains.eta * std::polar(1.0, gains.phi);

    CMatrix a = -coupling * net.Y;
    for (Eigen::Index k = 0; k < n; ++k) {
        a(k, k) += Complex(0.0, gains.omega0) + coupling * k_diag(k);
    }
    return {std::move(a), gains, k_diag};
}

RVector regulation_error(const CVector& v, const RVector& v_star) {
    RVector phi(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double vs2 = v_star(k) * v_star(k);
        phi(k) = (vs2 - std::norm(v(k))) / vs2;
    }
    return phi;
}

CVector dvoc_rhs(const CVector& v, const SystemMatrix& sys, const Setpoints& sp) {
    CVector out = sys.A * v;
    const double gain = sys.gains.eta * sys.gains.alpha;
    if (gain != 0.0) {
        out.array() += gain * regulation_error(v, sp.v_star).array() * v.array();
    }
    return out;
}

bool rotational_symmetry_check(const SystemMatrix& sys, const Setpoints& sp, const CVector& v,
                               double psi) {
    const Complex rot = std::polar(1.0, psi);
    const CVector lhs = dvoc_rhs(CVector(rot * v), sys, sp);
    const CVector rhs = rot * dvoc_rhs(v, sys, sp);
    const double scale = std::max(rhs.norm(), 1e-300);
    return (lhs - rhs).norm() <= 1e-12 * scale || (lhs - rhs).norm() == 0.0;
}

PowerFlow power_flow(const CVector& v, const NetworkModel& net) {
    const CMatrix y = net.full_admittance();
    require_size(v.size(), y.rows(), "voltage vector");
    // s_k = v_k * conj((Y v)_k)
    const CVector current = y * v;
    PowerFlow out;
    out.s = v.array() * current.conjugate().array();
    bool any_zero = false;
    for (Eigen::Index k = 0; k < v.size(); ++k) any_zero |= (v(k) == Complex(0.0, 0.0));
    if (!any_zero) {
        out.sigma_conj = out.s.conjugate().array() / v.array().abs2();
    }
    return out;
}

CVector normalized_power_ratio_form(const CVector& v, const NetworkModel& net) {
    require_nonzero(v);
    const CMatrix y = net.full_admittance();
    require_size(v.size(), y.rows(), "voltage vector");
    CVector out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index l = 0; l < v.size(); ++l) acc += y(k, l) * (v(l) / v(k));
        out(k) = acc;
    }
    return out;
}

ComplexAngleState to_complex_angle(const CVector& v, const std::optional<ComplexAngleState>& prev) {
    require_nonzero(v);
    if (prev && prev->theta_c.size() != v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "previous complex angle has wrong size");
    }
    CVector theta(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        double angle = std::arg(v(k));
        if (prev) {
            const double ref = prev->theta_c(k).imag();
            angle += 2.0 * kPi * std::round((ref - angle) / (2.0 * kPi));
        }
        theta(k) = Complex(std::log(std::abs(v(k))), angle);
    }
    return {theta};
}

CVector complex_frequency(const CVector& v, const SystemMatrix& sys, const Setpoints& sp) {
    require_nonzero(v);
    return dvoc_rhs(v, sys, sp).array() / v.array();
}

CVector complex_droop_frequency(const CVector& v, const NetworkModel& net,
                                const NormalizedPowerSetpoints& nsp, const Setpoints& sp,
                                const ControlGains& gains) {
    const CVector sigma = normalized_power_ratio_form(v, net);
    const RVector phi_err = regulation_error(v, sp.v_star);
    const Complex coupling = gains.eta * std::polar(1.0, gains.phi);
    CVector out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out(k) = Complex(0.0, gains.omega0) + coupling * (nsp.sigma_star_conj(k) - sigma(k)) +
                 gains.eta * gains.alpha * phi_err(k);
    }
    return out;
}

}  // namespace dvoc

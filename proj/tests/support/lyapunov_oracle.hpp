#pragma once

// Long-double restatement of the dVOC vector field and the Lyapunov function,
// built from network data without the library's system-matrix code.

#include "dvoc/dynamics.hpp"
#include "dvoc/netmodel.hpp"

#include <complex>
#include <vector>

namespace oracle {

struct LdSystem {
    std::vector<std::vector<std::complex<long double>>> A;
    std::vector<long double> v_star;
    long double gain = 0;  // eta alpha
};

inline LdSystem make_ld_system(const dvoc::NetworkModel& net, const dvoc::Setpoints& sp,
                               const dvoc::ControlGains& g) {
    using CL = std::complex<long double>;
    const std::size_t n = net.size();
    LdSystem s;
    s.A.assign(n, std::vector<CL>(n, CL(0)));
    const CL rot = std::polar<long double>(g.eta, g.phi);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            const auto y = net.Y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
            s.A[k][l] = -rot * CL(y.real(), y.imag());
        }
        const long double vs = sp.v_star(static_cast<Eigen::Index>(k));
        const CL sigma(sp.p_star(static_cast<Eigen::Index>(k)) / (vs * vs),
                       -sp.q_star(static_cast<Eigen::Index>(k)) / (vs * vs));
        const auto sh = net.shunts(static_cast<Eigen::Index>(k));
        s.A[k][k] += CL(0, g.omega0) + rot * (sigma - CL(sh.real(), sh.imag()));
        s.v_star.push_back(vs);
    }
    s.gain = static_cast<long double>(g.eta) * g.alpha;
    return s;
}

using CLVec = std::vector<std::complex<long double>>;

inline CLVec to_ld(const dvoc::CVector& v) {
    CLVec out;
    for (Eigen::Index k = 0; k < v.size(); ++k) out.emplace_back(v(k).real(), v(k).imag());
    return out;
}

inline CLVec ld_rhs(const CLVec& v, const LdSystem& s) {
    CLVec f(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        std::complex<long double> acc = 0;
        for (std::size_t l = 0; l < v.size(); ++l) acc += s.A[k][l] * v[l];
        const long double vs2 = s.v_star[k] * s.v_star[k];
        acc += s.gain * ((vs2 - std::norm(v[k])) / vs2) * v[k];
        f[k] = acc;
    }
    return f;
}

/// V(v) for dominant eigenvector phi (any normalization) and eigenvalue real part re1.
inline long double ld_lyapunov(const CLVec& v, const dvoc::CVector& phi, long double re1,
                               long double alpha1, const LdSystem& s) {
    const CLVec ph = to_ld(phi);
    std::complex<long double> proj = 0;
    long double pn = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        proj += std::conj(ph[k]) * v[k];
        pn += std::norm(ph[k]);
    }
    long double sv = 0, amp = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        sv += std::norm(v[k] - ph[k] * (proj / pn));
        const long double vs = s.v_star[k];
        const long double term = re1 / s.gain * vs + (vs * vs - std::norm(v[k])) / vs;
        amp += term * term;
    }
    return 0.5L * sv + 0.5L * s.gain * alpha1 * amp;
}

/// Derivative of V along the vector field by a central difference with
/// relative displacement h. V is invariant under a common phase rotation, so
/// the rotational part j Omega v of f is removed from the direction first.
inline long double fd_lyapunov_rate(const dvoc::CVector& v, const dvoc::CVector& phi, long double re1,
                                    long double alpha1, const LdSystem& s, long double h = 1e-7L) {
    using CL = std::complex<long double>;
    const CLVec x = to_ld(v);
    const CLVec f = ld_rhs(x, s);
    long double xn = 0, fn = 0;
    CL vf = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        xn += std::norm(x[k]);
        fn += std::norm(f[k]);
        vf += std::conj(x[k]) * f[k];
    }
    const long double omega = vf.imag() / xn;
    CLVec d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) d[k] = f[k] - CL(0, omega) * x[k];
    const long double dt = fn > 0 ? h * std::sqrt(xn / fn) : h;
    auto central = [&](long double step) {
        CLVec xp = x, xm = x;
        for (std::size_t k = 0; k < x.size(); ++k) {
            xp[k] += step * d[k];
            xm[k] -= step * d[k];
        }
        return (ld_lyapunov(xp, phi, re1, alpha1, s) - ld_lyapunov(xm, phi, re1, alpha1, s)) /
               (2 * step);
    };
    return central(dt);
}

}  // namespace oracle

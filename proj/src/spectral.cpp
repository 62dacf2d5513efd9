#include "dvoc/spectral.hpp"

#include "dvoc/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace dvoc {

double gap_tolerance(Complex lambda1) { return 1e-9 * std::max(1.0, std::abs(lambda1.real())); }

CVector normalize_eigenvector(const CVector& phi) {
    const double nrm = phi.norm();
    if (!(nrm > 0.0)) {
        throw Error(ErrorCode::EigenFailure, "zero eigenvector");
    }
    CVector u = phi / nrm;
    double max_mod = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) max_mod = std::max(max_mod, std::abs(u(k)));
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        if (std::abs(u(k)) >= max_mod * (1.0 - 1e-12)) {
            pivot = k;
            break;
        }
    }
    const Complex unwind = std::conj(u(pivot)) / std::abs(u(pivot));
    u *= unwind;
    u(pivot) = Complex(u(pivot).real(), 0.0);
    return u;
}

SpectralReport spectral_decomposition(const CMatrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "system matrix must be square and nonempty");
    }
    Eigen::ComplexEigenSolver<CMatrix> es(a, true);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::EigenFailure, "complex eigensolver did not converge");
    }
    const CVector& vals = es.eigenvalues();
    const Eigen::Index n = vals.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        if (vals(x).real() != vals(y).real()) return vals(x).real() > vals(y).real();
        return vals(x).imag() > vals(y).imag();
    });

    SpectralReport rep;
    rep.eigenvalues.resize(n);
    rep.eigenvectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        rep.eigenvalues(i) = vals(src);
        rep.eigenvectors.col(i) = normalize_eigenvector(es.eigenvectors().col(src));
    }
    rep.lambda1 = rep.eigenvalues(0);
    rep.phi1 = rep.eigenvectors.col(0);
    rep.gap = n > 1 ? rep.eigenvalues(0).real() - rep.eigenvalues(1).real()
                    : std::numeric_limits<double>::infinity();
    rep.multiplicity_ok = rep.gap > gap_tolerance(rep.lambda1);
    return rep;
}

SpectralReport analyze(const SystemMatrix& sys) {
    SpectralReport rep = spectral_decomposition(sys.A);
    if (!rep.multiplicity_ok) {
        throw Error(ErrorCode::DegenerateDominantMode,
                    "spectral gap " + std::to_string(rep.gap) + " is below tolerance");
    }
    return rep;
}

Projector make_projector(const CVector& phi1) {
    const Eigen::Index n = phi1.size();
    const double w = phi1.squaredNorm();
    if (!(w > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "projector direction is zero");
    }
    CMatrix p = CMatrix::Identity(n, n) - (phi1 * phi1.adjoint()) / w;
    // Exact Hermitian symmetry.
    p = (0.5 * (p + p.adjoint())).eval();
    return {std::move(p)};
}

double distance_to_S(const CVector& v, const Projector& proj) { return (proj.P * v).norm(); }

double steady_state_radius(const RVector& v_star, const ControlGains& gains, Complex lambda1) {
    const double gain = gains.eta * gains.alpha;
    const double ratio = gain > 0.0 ? 1.0 + lambda1.real() / gain : -1.0;
    if (!(ratio > 0.0)) {
        throw Error(ErrorCode::IllPosedAmplitude,
                    "1 + Re(lambda1)/(eta alpha) is not positive (alpha = " +
                        std::to_string(gains.alpha) + ")");
    }
    return v_star.norm() * std::sqrt(ratio);
}

double distance_to_T(const CVector& v, const SpectralReport& report, const Setpoints& sp,
                     const ControlGains& gains) {
    const double radius = steady_state_radius(sp.v_star, gains, report.lambda1);
    const CVector& phi = report.phi1;
    const Complex coeff = phi.dot(v) / phi.squaredNorm();  // phi^H v
    const double off = (v - coeff * phi).norm();
    const double along = std::abs(coeff) * phi.norm() - radius;
    return std::hypot(off, along);
}

double shifted_norm(const CMatrix& a, Complex lambda1) {
    CMatrix shifted = a;
    shifted.diagonal().array() -= lambda1;
    Eigen::BDCSVD<CMatrix> svd(shifted);
    return svd.singularValues()(0);
}

}  // namespace dvoc

#include "dvoc/netmodel.hpp"

#include "dvoc/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace dvoc {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kConnectivityTol = 1e-9;

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void require_symmetric(const CMatrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorCode::NotSymmetric, "matrix is not square");
    }
    const double scale = std::max(1.0, max_abs(m));
    const double asym = max_abs(m - m.transpose());
    if (asym > kSymmetryTol * scale) {
        throw Error(ErrorCode::NotSymmetric,
                    "max |M - M^T| = " + std::to_string(asym) + " exceeds tolerance");
    }
}

// Smallest adjustment of `diag` (in ulps) so that diag + shunt == target.
double fit_diagonal(double target, double shunt) {
    double diag = target - shunt;
    for (int i = 0; i < 8 && diag + shunt != target; ++i) {
        diag = std::nextafter(diag, diag + shunt < target ? HUGE_VAL : -HUGE_VAL);
    }
    return diag;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SingularInterior: return "SingularInterior";
        case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::ZeroVoltageSetpoint: return "ZeroVoltageSetpoint";
        case ErrorCode::ZeroVoltage: return "ZeroVoltage";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EigenFailure: return "EigenFailure";
        case ErrorCode::DegenerateDominantMode: return "DegenerateDominantMode";
        case ErrorCode::IllPosedAmplitude: return "IllPosedAmplitude";
        case ErrorCode::InconsistentSetpoints: return "InconsistentSetpoints";
        case ErrorCode::ZeroEigenvectorEntry: return "ZeroEigenvectorEntry";
        case ErrorCode::ConditionNotCertified: return "ConditionNotCertified";
        case ErrorCode::StepSizeCollapse: return "StepSizeCollapse";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

CMatrix NetworkModel::full_admittance() const {
    CMatrix y = Y;
    y.diagonal() += shunts;
    return y;
}

CMatrix assemble_admittance(const FullNetwork& full) {
    const auto n = static_cast<Eigen::Index>(full.n_total);
    CMatrix y = CMatrix::Zero(n, n);
    for (const auto& br : full.branches) {
        if (br.from >= full.n_total || br.to >= full.n_total) {
            throw Error(ErrorCode::InvalidArgument, "branch endpoint out of range");
        }
        if (br.from == br.to) {
            throw Error(ErrorCode::InvalidArgument, "branch connects a bus to itself");
        }
        if (br.admittance.real() < 0.0) {
            throw Error(ErrorCode::InvalidArgument,
                        "branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " has negative conductance");
        }
        const auto a = static_cast<Eigen::Index>(br.from);
        const auto b = static_cast<Eigen::Index>(br.to);
        y(a, a) += br.admittance;
        y(b, b) += br.admittance;
        y(a, b) -= br.admittance;
        y(b, a) -= br.admittance;
    }
    for (const auto& sh : full.shunts) {
        if (sh.bus >= full.n_total) {
            throw Error(ErrorCode::InvalidArgument, "shunt bus out of range");
        }
        const auto k = static_cast<Eigen::Index>(sh.bus);
        y(k, k) += sh.admittance;
    }
    return y;
}

ShuntSplit absorb_shunts(const CMatrix& y_with_shunts) {
    require_symmetric(y_with_shunts);
    const Eigen::Index n = y_with_shunts.rows();
    ShuntSplit out{y_with_shunts, CVector::Zero(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex off{0.0, 0.0};
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l != k) off += y_with_shunts(k, l);
        }
        const Complex target = y_with_shunts(k, k);
        const Complex shunt = target + off;
        out.shunts(k) = shunt;
        out.laplacian(k, k) = Complex(fit_diagonal(target.real(), shunt.real()),
                                      fit_diagonal(target.imag(), shunt.imag()));
    }
    return out;
}

bool is_connected(const CMatrix& admittance) {
    const Eigen::Index n = admittance.rows();
    if (n <= 1) return true;
    RMatrix lap = RMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            if (k == l) continue;
            const double w = std::abs(admittance(k, l));
            lap(k, l) = -w;
            lap(k, k) += w;
        }
    }
    const double scale = std::max(1.0, lap.cwiseAbs().maxCoeff());
    return algebraic_connectivity(lap / scale) > kConnectivityTol;
}

NetworkModel kron_reduce(const FullNetwork& full, bool require_connected) {
    if (full.converter_buses.empty()) {
        throw Error(ErrorCode::InvalidArgument, "network has no converter buses");
    }
    std::vector<int> role(full.n_total, 0);
    for (BusId b : full.converter_buses) {
        if (b >= full.n_total || role[b] != 0) {
            throw Error(ErrorCode::InvalidArgument, "converter bus list is invalid");
        }
        role[b] = 1;
    }
    for (BusId b : full.load_buses) {
        if (b >= full.n_total || role[b] != 0) {
            throw Error(ErrorCode::InvalidArgument, "load bus list is invalid");
        }
        role[b] = 2;
    }
    if (std::find(role.begin(), role.end(), 0) != role.end()) {
        throw Error(ErrorCode::InvalidArgument, "every bus must be a converter or a load bus");
    }

    const CMatrix y = assemble_admittance(full);

    const auto nc = static_cast<Eigen::Index>(full.converter_buses.size());
    const auto nl = static_cast<Eigen::Index>(full.load_buses.size());
    auto idx = [](BusId b) { return static_cast<Eigen::Index>(b); };

    CMatrix ycc(nc, nc);
    for (Eigen::Index i = 0; i < nc; ++i)
        for (Eigen::Index j = 0; j < nc; ++j)
            ycc(i, j) = y(idx(full.converter_buses[i]), idx(full.converter_buses[j]));

    CMatrix reduced = ycc;
    if (nl > 0) {
        CMatrix ycl(nc, nl);
        CMatrix yll(nl, nl);
        for (Eigen::Index i = 0; i < nc; ++i)
            for (Eigen::Index j = 0; j < nl; ++j)
                ycl(i, j) = y(idx(full.converter_buses[i]), idx(full.load_buses[j]));
        for (Eigen::Index i = 0; i < nl; ++i)
            for (Eigen::Index j = 0; j < nl; ++j)
                yll(i, j) = y(idx(full.load_buses[i]), idx(full.load_buses[j]));

        Eigen::PartialPivLU<CMatrix> lu(yll);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-13)) {
            throw Error(ErrorCode::SingularInterior,
                        "load-bus admittance block is singular (rcond " + std::to_string(rcond) + ")");
        }
        reduced -= ycl * lu.solve(CMatrix(ycl.transpose()));
        reduced = (0.5 * (reduced + reduced.transpose())).eval();
    }
    if (require_connected && !is_connected(y)) {
        throw Error(ErrorCode::DisconnectedGraph, "full network graph is not connected");
    }

    ShuntSplit split = absorb_shunts(reduced);
    if (require_connected && !is_connected(split.laplacian)) {
        throw Error(ErrorCode::DisconnectedGraph, "reduced network graph is not connected");
    }
    return NetworkModel{std::move(split.laplacian), std::move(split.shunts)};
}

RMatrix rotated_laplacian(const NetworkModel& net, double phi) {
    const Complex rot = std::polar(1.0, phi);
    return (rot * net.Y).real();
}

double algebraic_connectivity(const RMatrix& laplacian) {
    if (laplacian.rows() < 2) {
        throw Error(ErrorCode::InvalidArgument, "connectivity needs at least two nodes");
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(laplacian, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    }
    return es.eigenvalues()(1);
}

ConnectivityReading rotated_connectivity_both(const NetworkModel& net, double phi) {
    const RMatrix lap = rotated_laplacian(net, phi);
    const Eigen::Index n = lap.rows();
    if (n < 2) {
        throw Error(ErrorCode::InvalidArgument, "connectivity needs at least two nodes");
    }
    const double scale = lap.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
            if (k != l && lap(k, l) > 1e-12 * scale) {
                throw Error(ErrorCode::NegativeWeight,
                            "rotated weight between nodes " + std::to_string(k) + " and " +
                                std::to_string(l) + " is negative");
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(lap, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
    }
    return {es.eigenvalues()(1), es.eigenvalues()(n - 2)};
}

double rotated_connectivity(const NetworkModel& net, double phi) {
    const double l2 = rotated_connectivity_both(net, phi).algebraic;
    if (!(l2 > kConnectivityTol)) {
        throw Error(ErrorCode::DisconnectedGraph,
                    "rotated Laplacian connectivity " + std::to_string(l2) + " is not positive");
    }
    return l2;
}

}  // namespace dvoc

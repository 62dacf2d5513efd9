#pragma once

// Converter network description: full bus/branch data, Kron reduction onto
// the converter buses, shunt absorption and rotated algebraic connectivity.

#include "dvoc/types.hpp"

#include <cstddef>
#include <vector>

namespace dvoc {

using BusId = std::size_t;

struct Branch {
    BusId from = 0;
    BusId to = 0;
    Complex admittance;  // per-unit, Re >= 0 for passive RL lines
};

struct Shunt {
    BusId bus = 0;
    Complex admittance;
};

struct FullNetwork {
    std::size_t n_total = 0;
    std::vector<Branch> branches;
    std::vector<Shunt> shunts;
    std::vector<BusId> converter_buses;
    std::vector<BusId> load_buses;
};

/// Reduced network over the N converter buses. `Y` is a complex symmetric
/// Laplacian (zero row sums); the diagonal remainder of the reduction lives in
/// `shunts`, so the physical admittance is `Y + diag(shunts)`.
struct NetworkModel {
    CMatrix Y;
    CVector shunts;

    std::size_t size() const { return static_cast<std::size_t>(Y.rows()); }
    CMatrix full_admittance() const;
};

struct ShuntSplit {
    CMatrix laplacian;
    CVector shunts;
};

/// Admittance matrix of the full network (all buses, shunts on the diagonal).
CMatrix assemble_admittance(const FullNetwork& full);

/// Eliminates the load buses: Y_red = Y_CC - Y_CL * Y_LL^{-1} * Y_LC, then
/// splits the result into Laplacian and shunt parts. Throws SingularInterior,
/// and DisconnectedGraph unless `require_connected` is false (used for
/// contingency networks that are certified, and rejected, later).
NetworkModel kron_reduce(const FullNetwork& full, bool require_connected = true);

/// Splits a symmetric matrix into a zero-row-sum part and a diagonal shunt
/// vector such that `laplacian + diag(shunts)` reproduces the input bit for bit.
ShuntSplit absorb_shunts(const CMatrix& y_with_shunts);

/// Laplacian with weights given by the rotated branch conductances
/// Re(e^{j phi} y_kl), i.e. Re(e^{j phi} Y).
RMatrix rotated_laplacian(const NetworkModel& net, double phi);

/// Both spectral readings of Re(e^{j phi} Y). `algebraic` is the Fiedler value
/// (second smallest eigenvalue), `second_largest` the literal second largest.
struct ConnectivityReading {
    double algebraic = 0.0;
    double second_largest = 0.0;
};

ConnectivityReading rotated_connectivity_both(const NetworkModel& net, double phi);

/// Algebraic connectivity of Re(e^{j phi} Y). Throws DisconnectedGraph when the
/// value is not strictly positive and NegativeWeight when a rotated branch
/// weight is negative.
double rotated_connectivity(const NetworkModel& net, double phi);

/// Fiedler value of a real symmetric Laplacian.
double algebraic_connectivity(const RMatrix& laplacian);

/// Topological connectivity of the graph with weights |M_kl|, k != l.
bool is_connected(const CMatrix& admittance);

}  // namespace dvoc

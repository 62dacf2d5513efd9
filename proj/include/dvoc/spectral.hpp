#pragma once

// Eigen-analysis of the (complex symmetric, non-Hermitian) system matrix.

#include "dvoc/dynamics.hpp"
#include "dvoc/types.hpp"

namespace dvoc {

struct SpectralReport {
    CVector eigenvalues;   // sorted by descending real part
    CMatrix eigenvectors;  // column i belongs to eigenvalues(i), unit norm
    Complex lambda1;
    CVector phi1;  // unit norm, first maximal-modulus entry real positive
    double gap = 0.0;
    bool multiplicity_ok = false;
};

struct Projector {
    CMatrix P;  // I - phi1 phi1^H / (phi1^H phi1)
};

/// Relative threshold on Re(lambda1) - Re(lambda2) below which the dominant
/// mode is treated as degenerate.
double gap_tolerance(Complex lambda1);

/// Full eigendecomposition; never throws on a degenerate dominant mode, it only
/// clears `multiplicity_ok`.
SpectralReport spectral_decomposition(const CMatrix& a);

/// As spectral_decomposition, but throws DegenerateDominantMode when the gap
/// is below gap_tolerance.
SpectralReport analyze(const SystemMatrix& sys);

/// Deterministic phase rule: unit norm, entry of maximal modulus (lowest index
/// among ties) rotated onto the positive real axis.
CVector normalize_eigenvector(const CVector& phi);

Projector make_projector(const CVector& phi1);

double distance_to_S(const CVector& v, const Projector& proj);

/// Radius of the steady-state circle {mu phi1 : |mu| = r} for unit-norm phi1
/// and consistent voltage setpoints; throws IllPosedAmplitude when
/// 1 + Re(lambda1)/(eta alpha) <= 0.
double steady_state_radius(const RVector& v_star, const ControlGains& gains, Complex lambda1);

double distance_to_T(const CVector& v, const SpectralReport& report, const Setpoints& sp,
                     const ControlGains& gains);

/// Largest singular value of A - lambda1 I.
double shifted_norm(const CMatrix& a, Complex lambda1);

}  // namespace dvoc

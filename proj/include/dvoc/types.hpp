#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>

namespace dvoc {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr Complex kJ{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

/// Selects the serial reference loop or the OpenMP kernel for batch work.
enum class Execution { Serial, Parallel };

}  // namespace dvoc

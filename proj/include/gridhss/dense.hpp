#pragma once

#include <Eigen/Dense>

#include "gridhss/errors.hpp"

namespace gridhss {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

bool all_finite(const Matrix& m);

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Relative pivot threshold below which a matrix is declared singular.
inline constexpr double kPivotThreshold = 1e-14;

// Inverse via row-pivoted LU. Throws SingularMatrix when a pivot falls below
// kPivotThreshold times the largest pivot.
Matrix dense_invert(const Matrix& m);

}  // namespace gridhss

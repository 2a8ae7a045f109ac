#include "gridhss/dense.hpp"

#include <string>

namespace gridhss {

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix dense_invert(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("dense_invert: matrix must be square");
  if (m.rows() == 0) return m;

  Eigen::PartialPivLU<Matrix> lu(m);
  const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pmax = pivots.maxCoeff();
  const double pmin = pivots.minCoeff();
  if (pmax == 0.0 || pmin < kPivotThreshold * pmax)
    throw SingularMatrix("dense_invert: pivot " + std::to_string(pmin) +
                         " below threshold relative to " + std::to_string(pmax));
  return lu.inverse();
}

}  // namespace gridhss

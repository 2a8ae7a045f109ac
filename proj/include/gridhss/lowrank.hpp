#pragma once

#include "gridhss/dense.hpp"

namespace gridhss {

// Truncation accuracy is an absolute spectral-norm bound by default. Relative
// scales the threshold by (a lower-bound estimate of) the largest singular
// value, so the guarantee stays conservative.
enum class TruncationMode { Absolute, Relative };

// PivotedQr runs a column-pivoted Householder QR that stops as soon as the
// dropped tail is within tolerance, then trims the rank with a small SVD
// (O(mnk) overall). Svd computes a full decomposition; kept for oracle use.
enum class FactorMethod { PivotedQr, Svd };

// Rank-k product left * right^T. rank() == 0 encodes the zero matrix.
struct LowRankFactor {
  Matrix left;   // m x k
  Matrix right;  // n x k

  Index rows() const { return left.rows(); }
  Index cols() const { return right.rows(); }
  Index rank() const { return left.cols(); }

  Matrix dense() const;
  LowRankFactor transposed() const { return {right, left}; }

  static LowRankFactor zero(Index m, Index n) {
    return {Matrix(m, 0), Matrix(n, 0)};
  }
};

// Factors m to within eps in spectral norm with the smallest rank the
// underlying decomposition resolves (minimal for well-separated spectra).
LowRankFactor truncated_factor(const Matrix& m, double eps,
                               TruncationMode mode = TruncationMode::Absolute,
                               FactorMethod method = FactorMethod::PivotedQr);

// Equivalent factor of rank <= a.rank() with ||a - result||_2 <= eps.
LowRankFactor lr_recompress(const LowRankFactor& a, double eps);

// a + b, recompressed to eps. Short-circuits when either side is zero.
LowRankFactor lr_add(const LowRankFactor& a, const LowRankFactor& b,
                     double eps);

}  // namespace gridhss

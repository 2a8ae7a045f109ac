#include "gridhss/lowrank.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace gridhss {

namespace {

// Result of the truncated column-pivoted QR: m*P ~ Q_k (R_k) with the exact
// Frobenius norm of the dropped trailing block.
struct PivotedQrResult {
  Matrix q;        // m x k, orthonormal
  Matrix rt;       // n x k, rows already unpermuted: m ~ q * rt^T
  double tail_fnorm = 0.0;
};

// Businger-Golub column-pivoted Householder QR, stopped once the Frobenius
// norm of the untouched trailing block falls below tol. Column norms are
// downdated with a recompute guard against cancellation.
PivotedQrResult pivoted_qr(const Matrix& m, double tol) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  const Index kmax = std::min(rows, cols);

  Matrix r = m;
  std::vector<Index> perm(static_cast<std::size_t>(cols));
  std::iota(perm.begin(), perm.end(), Index{0});
  Vector norm2(cols), norm2_ref(cols);
  for (Index j = 0; j < cols; ++j) norm2[j] = r.col(j).squaredNorm();
  norm2_ref = norm2;

  std::vector<Vector> hh;      // Householder vectors, length rows - k
  std::vector<double> hh_inv;  // 2 / v^T v
  hh.reserve(static_cast<std::size_t>(kmax));
  hh_inv.reserve(static_cast<std::size_t>(kmax));

  Index k = 0;
  while (k < kmax) {
    Index jmax = k;
    double rem2 = 0.0;
    for (Index j = k; j < cols; ++j) {
      rem2 += std::max(norm2[j], 0.0);
      if (norm2[j] > norm2[jmax]) jmax = j;
    }
    if (std::sqrt(std::max(rem2, 0.0)) <= tol) break;

    if (jmax != k) {
      r.col(k).swap(r.col(jmax));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(jmax)]);
      std::swap(norm2[k], norm2[jmax]);
      std::swap(norm2_ref[k], norm2_ref[jmax]);
    }

    Vector x = r.col(k).tail(rows - k);
    double alpha = x.norm();
    if (alpha == 0.0) break;
    if (x[0] > 0) alpha = -alpha;
    Vector v = x;
    v[0] -= alpha;
    const double vtv = v.squaredNorm();
    if (vtv == 0.0) break;
    const double two_over = 2.0 / vtv;

    for (Index j = k + 1; j < cols; ++j) {
      auto tail = r.col(j).tail(rows - k);
      tail -= v * (two_over * v.dot(tail));
    }
    r(k, k) = alpha;
    if (k + 1 < rows) r.col(k).tail(rows - k - 1).setZero();

    for (Index j = k + 1; j < cols; ++j) {
      norm2[j] -= r(k, j) * r(k, j);
      if (norm2[j] < 0.01 * norm2_ref[j]) {
        norm2[j] = (k + 1 < rows)
                       ? r.col(j).tail(rows - k - 1).squaredNorm()
                       : 0.0;
        norm2_ref[j] = norm2[j];
      }
    }

    hh.push_back(std::move(v));
    hh_inv.push_back(two_over);
    ++k;
  }

  PivotedQrResult out;
  out.tail_fnorm = (k < kmax)
                       ? r.block(k, k, rows - k, cols - k).norm()
                       : 0.0;

  out.q = Matrix::Identity(rows, k);
  for (Index i = k - 1; i >= 0; --i) {
    const Vector& v = hh[static_cast<std::size_t>(i)];
    auto blk = out.q.block(i, 0, rows - i, k);
    blk -= v * (hh_inv[static_cast<std::size_t>(i)] * (v.transpose() * blk));
  }

  out.rt = Matrix::Zero(cols, k);
  for (Index j = 0; j < cols; ++j) {
    const Index len = std::min(j + 1, k);
    out.rt.row(perm[static_cast<std::size_t>(j)]).head(len) =
        r.block(0, j, len, 1).transpose();
  }
  return out;
}

// SVD trim of q * g^T (q orthonormal): drops singular values <= drop_tol.
LowRankFactor svd_trim(const Matrix& q, const Matrix& g, double drop_tol) {
  const Index k = g.cols();
  if (k == 0) return LowRankFactor::zero(q.rows(), g.rows());
  Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Index keep = 0;
  while (keep < sv.size() && sv[keep] > drop_tol) ++keep;
  if (keep == 0) return LowRankFactor::zero(q.rows(), g.rows());
  Matrix left = q * svd.matrixV().leftCols(keep);
  for (Index i = 0; i < keep; ++i) left.col(i) *= sv[i];
  return {std::move(left), svd.matrixU().leftCols(keep)};
}

double largest_colnorm(const Matrix& m) {
  double best = 0.0;
  for (Index j = 0; j < m.cols(); ++j)
    best = std::max(best, m.col(j).norm());
  return best;
}

}  // namespace

Matrix LowRankFactor::dense() const {
  if (rank() == 0) return Matrix::Zero(rows(), cols());
  return left * right.transpose();
}

LowRankFactor truncated_factor(const Matrix& m, double eps,
                               TruncationMode mode, FactorMethod method) {
  if (eps <= 0.0) throw std::invalid_argument("truncated_factor: eps must be > 0");
  if (m.rows() == 0 || m.cols() == 0)
    return LowRankFactor::zero(m.rows(), m.cols());

  if (method == FactorMethod::Svd) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol =
        mode == TruncationMode::Absolute ? eps : eps * (sv.size() ? sv[0] : 0.0);
    Index keep = 0;
    while (keep < sv.size() && sv[keep] > tol) ++keep;
    if (keep == 0) return LowRankFactor::zero(m.rows(), m.cols());
    Matrix left = svd.matrixU().leftCols(keep) * sv.head(keep).asDiagonal();
    return {std::move(left), svd.matrixV().leftCols(keep)};
  }

  // sigma_max >= any column norm, so the relative threshold never overshoots.
  const double tol = mode == TruncationMode::Absolute
                         ? eps
                         : eps * largest_colnorm(m);
  PivotedQrResult qr = pivoted_qr(m, tol);
  const double budget = std::max(0.0, tol - qr.tail_fnorm);
  return svd_trim(qr.q, qr.rt, budget);
}

LowRankFactor lr_recompress(const LowRankFactor& a, double eps) {
  if (a.rank() == 0) return a;
  const Index kl = std::min(a.left.rows(), a.left.cols());
  const Index kr = std::min(a.right.rows(), a.right.cols());

  Eigen::HouseholderQR<Matrix> qrl(a.left);
  Eigen::HouseholderQR<Matrix> qrr(a.right);
  Matrix ql = qrl.householderQ() * Matrix::Identity(a.left.rows(), kl);
  Matrix qr = qrr.householderQ() * Matrix::Identity(a.right.rows(), kr);
  Matrix rl = qrl.matrixQR().topRows(kl).triangularView<Eigen::Upper>();
  Matrix rr = qrr.matrixQR().topRows(kr).triangularView<Eigen::Upper>();

  Matrix core = rl * rr.transpose();  // kl x kr
  Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  Index keep = 0;
  while (keep < sv.size() && sv[keep] > eps) ++keep;
  keep = std::min(keep, a.rank());
  if (keep == 0) return LowRankFactor::zero(a.rows(), a.cols());

  Matrix left = ql * svd.matrixU().leftCols(keep);
  for (Index i = 0; i < keep; ++i) left.col(i) *= sv[i];
  return {std::move(left), qr * svd.matrixV().leftCols(keep)};
}

LowRankFactor lr_add(const LowRankFactor& a, const LowRankFactor& b,
                     double eps) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("lr_add: shape mismatch");
  if (b.rank() == 0) return a;
  if (a.rank() == 0) return b;

  LowRankFactor cat{Matrix(a.rows(), a.rank() + b.rank()),
                    Matrix(a.cols(), a.rank() + b.rank())};
  cat.left << a.left, b.left;
  cat.right << a.right, b.right;
  return lr_recompress(cat, eps);
}

}  // namespace gridhss

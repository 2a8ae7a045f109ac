#pragma once

// Test-only oracles, intentionally independent of the library's numerical
// paths: plain Gaussian elimination, power iteration, and a direct row-major
// five-point assembly of the conduction network.

#include <cmath>
#include <functional>
#include <vector>

#include "gridhss/dense.hpp"
#include "gridhss/rng.hpp"

namespace testsupport {

using gridhss::Index;
using gridhss::Matrix;
using gridhss::Vector;

// Gaussian elimination with partial pivoting, written out longhand so it
// shares nothing with the library's LU path.
inline Vector elimination_solve(Matrix a, Vector b) {
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    for (Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      a.row(piv).swap(a.row(k));
      std::swap(b[piv], b[k]);
    }
    for (Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (Index j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline Matrix elimination_invert(const Matrix& a) {
  const Index n = a.rows();
  Matrix inv(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e[j] = 1.0;
    inv.col(j) = elimination_solve(a, e);
  }
  return inv;
}

// Spectral norm estimate by power iteration on op^T op.
inline double power_norm(const std::function<Vector(const Vector&)>& op,
                         const std::function<Vector(const Vector&)>& op_t,
                         Index n, gridhss::Rng64& rng, int iters = 50,
                         double rel_tol = 1e-3) {
  Vector v = gridhss::random_unit_vector(n, rng);
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = op_t(op(v));
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    v = w / nw;
    if (it > 0 && std::abs(next - sigma) <= rel_tol * next) return next;
    sigma = next;
  }
  return sigma;
}

inline double power_norm(const Matrix& d, gridhss::Rng64& rng) {
  return power_norm([&](const Vector& x) { return Vector(d * x); },
                    [&](const Vector& x) { return Vector(d.transpose() * x); },
                    d.cols(), rng);
}

// Independent row-major assembly of the full interior system A x = b for a
// conduction network; shares nothing with the spiral machinery.
struct RowMajorSystem {
  Matrix a;
  Vector b;
};

template <typename Network>
RowMajorSystem row_major_assembly(const Network& g) {
  const Index m = g.m;
  const Index n = m * m;
  RowMajorSystem sys{Matrix::Zero(n, n), Vector::Zero(n)};
  auto btemp = [&](Index r, Index c) {
    if (r == 0) return g.boundary_temps[c];
    if (r == m + 1) return g.boundary_temps[(m + 2) + 2 * m + c];
    return g.boundary_temps[(m + 2) + 2 * (r - 1) + (c == 0 ? 0 : 1)];
  };
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const Index id = i * m + j;
      const Index r = i + 1, c = j + 1;
      const double up = g.v_cond(r - 1, c), down = g.v_cond(r, c);
      const double left = g.h_cond(r, c - 1), right = g.h_cond(r, c);
      // canonical bar order (up, left, right, down), bitwise reproducible
      sys.a(id, id) = up + left + right + down;
      if (i > 0) sys.a(id, id - m) = -up;
      else sys.b[id] += up * btemp(0, c);
      if (i + 1 < m) sys.a(id, id + m) = -down;
      else sys.b[id] += down * btemp(m + 1, c);
      if (j > 0) sys.a(id, id - 1) = -left;
      else sys.b[id] += left * btemp(r, 0);
      if (j + 1 < m) sys.a(id, id + 1) = -right;
      else sys.b[id] += right * btemp(r, m + 1);
    }
  return sys;
}

// Cyclic tridiagonal ring operator: diag 4, neighbours -1, wraparound -1.
// SPD and strongly compressible, a stand-in for the per-ring blocks.
inline Matrix ring_operator(Index n) {
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 4.0;
  for (Index i = 0; i + 1 < n; ++i) {
    m(i, i + 1) = -1.0;
    m(i + 1, i) = -1.0;
  }
  m(0, n - 1) += -1.0;
  m(n - 1, 0) += -1.0;
  return m;
}

}  // namespace testsupport

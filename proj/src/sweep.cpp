#include "gridhss/sweep.hpp"

#include <chrono>
#include <utility>

namespace gridhss {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// C * x * C^T for the dense path, using the one-nonzero-per-row structure of
// the coupling instead of materializing it.
Matrix couple_triple(const InterfaceCoupling& c, const Matrix& x) {
  Matrix g = Matrix::Zero(c.outer_size, c.inner_size);  // C * x
  for (Index u = 0; u < c.inner_size; ++u)
    g.row(c.outward[static_cast<std::size_t>(u)]) -= c.cond[u] * x.row(u);
  for (const auto& cb : c.corners)
    g.row(cb.outer_pos) -= cb.cond * x.row(cb.inner_pos);
  Matrix out = Matrix::Zero(c.outer_size, c.outer_size);  // (C x) * C^T
  for (Index u = 0; u < c.inner_size; ++u)
    out.col(c.outward[static_cast<std::size_t>(u)]) -= c.cond[u] * g.col(u);
  for (const auto& cb : c.corners)
    out.col(cb.outer_pos) -= cb.cond * g.col(cb.inner_pos);
  return out;
}

// The corner-bar cross terms of the Schur update, returned as a low-rank
// factor on the outer index set (already negated). With M0 the mapped part
// and R the corner part of -A_{outer,inner}, this is
// -(M0 X R^T + R X M0^T + R X R^T); the embed path supplies -M0 X M0^T.
LowRankFactor corner_correction(const InterfaceCoupling& c,
                                const HssMatrix& x) {
  const Index nc = static_cast<Index>(c.corners.size());
  const Index n_in = c.inner_size;
  const Index n_out = c.outer_size;
  if (nc == 0) return LowRankFactor::zero(n_out, n_out);

  Matrix e = Matrix::Zero(n_in, nc);
  for (Index j = 0; j < nc; ++j)
    e(c.corners[static_cast<std::size_t>(j)].inner_pos, j) = 1.0;
  Matrix g = hss_apply_thin(x, e);             // X e_sigma
  Matrix gt = hss_apply_thin_transpose(x, e);  // X^T e_sigma

  auto scatter_scaled = [&](const Matrix& rows) {
    Matrix out = Matrix::Zero(n_out, rows.cols());
    for (Index u = 0; u < n_in; ++u)
      out.row(c.outward[static_cast<std::size_t>(u)]) = c.cond[u] * rows.row(u);
    return out;
  };
  Matrix e_tau = Matrix::Zero(n_out, nc);
  Matrix e_tau_gamma = Matrix::Zero(n_out, nc);
  for (Index j = 0; j < nc; ++j) {
    const auto& cb = c.corners[static_cast<std::size_t>(j)];
    e_tau(cb.outer_pos, j) = 1.0;
    e_tau_gamma(cb.outer_pos, j) = cb.cond;
  }

  Matrix u1 = scatter_scaled(g);  // columns scaled by gamma below
  for (Index j = 0; j < nc; ++j)
    u1.col(j) *= c.corners[static_cast<std::size_t>(j)].cond;
  Matrix v2 = scatter_scaled(gt);
  Matrix m3 = e.transpose() * g;  // E^T X E
  for (Index j = 0; j < nc; ++j) {
    const double gamma = c.corners[static_cast<std::size_t>(j)].cond;
    m3.row(j) *= gamma;
    m3.col(j) *= gamma;
  }

  LowRankFactor f{Matrix(n_out, 3 * nc), Matrix(n_out, 3 * nc)};
  f.left << -u1, -e_tau_gamma, -e_tau * m3;
  f.right << e_tau, v2, e_tau;
  return f;
}

struct StepResult {
  RingInverse inverse;
  bool retessellated = false;
  Index built_floats = 0;  // representation size of the pre-inversion operator
};

// One elimination step: \tilde A = A_kk - C X C^T, inverted in the
// representation fitting the ring size. The first ring has no coupling and
// reduces to \tilde A_11 = A_11.
StepResult sweep_step(const RingInverse& prev, const RingBlock& blk,
                      double eps, Index leaf_max) {
  StepResult out;
  const Index n_out = blk.diag.n;
  const InterfaceCoupling& c = blk.couple;

  const bool want_hss = leaf_max > 0 && n_out > 2 * leaf_max;
  if (!want_hss) {
    Matrix a = blk.diag.dense();
    if (c.inner_size > 0) a -= couple_triple(c, inverse_dense(prev));
    out.built_floats = a.size();
    out.inverse = dense_invert(a);
    return out;
  }

  HssMatrix a = [&] {
    if (c.inner_size == 0)
      return hss_add_stencil(hss_zero(n_out, leaf_max, eps), blk.diag, eps);
    HssMatrix converted;
    const HssMatrix* x = nullptr;
    if (std::holds_alternative<HssMatrix>(prev)) {
      x = &std::get<HssMatrix>(prev);
    } else {
      converted = hss_from_dense(std::get<Matrix>(prev), leaf_max, eps);
      x = &converted;
    }
    Vector neg_cond = -c.cond;
    HssMatrix core = hss_embed_stretch(hss_scale(*x, neg_cond, c.cond), n_out,
                                       c.outward);
    LowRankFactor corners = corner_correction(c, *x);
    if (corners.rank() > 0) core = hss_lowrank_update(core, corners, eps);
    return hss_add_stencil(core, blk.diag, eps);
  }();
  if (hss_stats(a).max_leaf > 2 * leaf_max) {
    a = hss_retessellate(a, leaf_max, eps);
    out.retessellated = true;
  }
  out.built_floats = hss_stats(a).total_floats;
  out.inverse = hss_invert(a, eps);
  return out;
}

SweepState run_sweep(BlockSource& src, const std::vector<Vector>* rhs,
                     double eps, Index leaf_max, SweepMode mode) {
  const Index nrings = src.ring_count();
  if (nrings == 0) throw std::invalid_argument("sweep: empty system");
  if (rhs && static_cast<Index>(rhs->size()) != nrings)
    throw std::invalid_argument("sweep: rhs block count mismatch");

  SweepState s;
  s.mode = mode;
  s.eps = eps;
  s.leaf_max = leaf_max;

  Vector load_prev;
  for (Index k = 0; k < nrings; ++k) {
    const auto t0 = Clock::now();
    RingBlock blk = src.fetch(k);
    if (k == 0 && blk.couple.inner_size != 0)
      throw std::invalid_argument("sweep: first ring cannot have a coupling");
    if (rhs) blk.rhs = (*rhs)[static_cast<std::size_t>(k)];
    if (mode == SweepMode::BoundaryOnly && k + 1 < nrings &&
        blk.rhs.size() > 0 && blk.rhs.norm() != 0.0)
      throw std::invalid_argument(
          "sweep: BoundaryOnly mode requires an unloaded interior");
    if (mode == SweepMode::Full && blk.rhs.size() != blk.diag.n)
      throw std::invalid_argument("sweep: Full mode needs a load per ring");

    StepResult step = sweep_step(s.current, blk, eps, leaf_max);

    const Index prev_floats = (k == 0) ? 0 : inverse_floats(s.current);
    const Index live = std::max(prev_floats + step.built_floats,
                                step.built_floats + inverse_floats(step.inverse));
    Index stored = 0;
    if (mode == SweepMode::Full)
      for (const auto& inv : s.inverses) stored += inverse_floats(inv);
    s.peak_floats = std::max(s.peak_floats, stored + live);

    if (mode == SweepMode::Full) {
      if (k == 0) {
        load_prev = blk.rhs;
      } else {
        // fold the previous modified load into this ring's
        Vector t = inverse_apply(s.current, load_prev);
        load_prev = blk.rhs - blk.couple.apply(t);
        s.inverses.push_back(std::move(s.current));
      }
      s.loads.push_back(load_prev);
    } else if (k + 1 == nrings && blk.rhs.size() > 0) {
      s.loads.assign(1, blk.rhs);
    }

    s.current = std::move(step.inverse);
    s.steps.push_back({k + 1, seconds_since(t0), step.retessellated,
                       inverse_floats(s.current)});
  }
  if (mode == SweepMode::Full) s.inverses.push_back(s.current);
  return s;
}

}  // namespace

Index inverse_floats(const RingInverse& inv) {
  if (std::holds_alternative<Matrix>(inv))
    return std::get<Matrix>(inv).size();
  return hss_stats(std::get<HssMatrix>(inv)).total_floats;
}

Vector inverse_apply(const RingInverse& inv, const Vector& x) {
  if (std::holds_alternative<Matrix>(inv)) return std::get<Matrix>(inv) * x;
  return hss_matvec(std::get<HssMatrix>(inv), x);
}

Matrix inverse_dense(const RingInverse& inv, Index size_cap) {
  if (std::holds_alternative<Matrix>(inv)) return std::get<Matrix>(inv);
  return hss_densify(std::get<HssMatrix>(inv), size_cap);
}

RingBlock BlockSystemSource::fetch(Index k) {
  RingBlock blk;
  blk.diag = b_->diag[static_cast<std::size_t>(k)];
  if (k > 0) blk.couple = b_->couple[static_cast<std::size_t>(k - 1)];
  if (static_cast<std::size_t>(k) < b_->rhs.size())
    blk.rhs = b_->rhs[static_cast<std::size_t>(k)];
  return blk;
}

SweepState sweep_dense(const BlockSystem& b, const std::vector<Vector>& rhs) {
  BlockSystemSource src(b);
  return run_sweep(src, &rhs, 0.0, 0, SweepMode::Full);
}

SweepState sweep_hss(const BlockSystem& b, const std::vector<Vector>& rhs,
                     double eps, Index leaf_max, SweepMode mode) {
  if (leaf_max < 1) throw std::invalid_argument("sweep_hss: leaf_max < 1");
  BlockSystemSource src(b);
  return run_sweep(src, &rhs, eps, leaf_max, mode);
}

Vector back_substitute(const SweepState& s, const BlockSystem& b) {
  if (s.mode != SweepMode::Full)
    throw std::invalid_argument("back_substitute: needs a Full-mode sweep");
  const Index nrings = b.ring_count();
  if (static_cast<Index>(s.inverses.size()) != nrings ||
      static_cast<Index>(s.loads.size()) != nrings)
    throw std::invalid_argument("back_substitute: incomplete sweep state");

  std::vector<Vector> x(static_cast<std::size_t>(nrings));
  x.back() = inverse_apply(s.inverses.back(), s.loads.back());
  for (Index k = nrings - 2; k >= 0; --k) {
    const auto& couple = b.couple[static_cast<std::size_t>(k)];
    Vector w = couple.apply_transpose(x[static_cast<std::size_t>(k + 1)]);
    x[static_cast<std::size_t>(k)] = inverse_apply(
        s.inverses[static_cast<std::size_t>(k)],
        s.loads[static_cast<std::size_t>(k)] - w);
  }
  Index total = 0;
  for (const auto& xk : x) total += xk.size();
  Vector out(total);
  Index off = 0;
  for (const auto& xk : x) {
    out.segment(off, xk.size()) = xk;
    off += xk.size();
  }
  return out;
}

ApplyPlan::ApplyPlan(const HssMatrix& h, double eps) : n_(h.size()) {
  if (n_ > 0) pack(h.root(), 0, eps);
}

ApplyPlan::ApplyPlan(const Matrix& dense) : n_(dense.rows()) {
  if (n_ == 0) return;
  ops_.push_back({true, 0, n_, 0, 0, arena_.size()});
  for (Index j = 0; j < n_; ++j)
    for (Index i = 0; i < n_; ++i)
      arena_.push_back(0.5 * (dense(i, j) + dense(j, i)));
}

void ApplyPlan::pack(const HssMatrix::Node& node, Index off, double eps) {
  if (node.is_leaf()) {
    ops_.push_back({true, off, node.n, 0, 0, arena_.size()});
    for (Index j = 0; j < node.n; ++j)
      for (Index i = 0; i < node.n; ++i)
        arena_.push_back(0.5 * (node.block(i, j) + node.block(j, i)));
    return;
  }
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  pack(*node.lo, off, eps);
  pack(*node.hi, off + nl, eps);
  LowRankFactor half_up = node.upper;
  if (half_up.rank() > 0) half_up.left *= 0.5;
  LowRankFactor half_low = node.lower.transposed();
  if (half_low.rank() > 0) half_low.left *= 0.5;
  LowRankFactor f = lr_add(half_up, half_low, eps);
  if (f.rank() == 0) return;
  max_rank_ = std::max(max_rank_, f.rank());
  ops_.push_back({false, off, nl, nh, f.rank(), arena_.size()});
  for (Index j = 0; j < f.rank(); ++j)
    for (Index i = 0; i < nh; ++i) arena_.push_back(f.right(i, j));
  for (Index j = 0; j < f.rank(); ++j)
    for (Index i = 0; i < nl; ++i) arena_.push_back(f.left(i, j));
}

Vector ApplyPlan::apply(const Vector& x) const {
  if (x.size() != n_) throw std::invalid_argument("ApplyPlan: length mismatch");
  Vector y = Vector::Zero(n_);
  Vector w(max_rank_), w2(max_rank_);
  for (const Op& op : ops_) {
    if (op.leaf) {
      Eigen::Map<const Matrix> blk(arena_.data() + op.data, op.n_lo, op.n_lo);
      y.segment(op.off, op.n_lo).noalias() += blk * x.segment(op.off, op.n_lo);
      continue;
    }
    Eigen::Map<const Matrix> v(arena_.data() + op.data, op.n_hi, op.k);
    Eigen::Map<const Matrix> u(arena_.data() + op.data + op.n_hi * op.k,
                               op.n_lo, op.k);
    w.head(op.k).noalias() = v.transpose() * x.segment(op.off + op.n_lo, op.n_hi);
    w2.head(op.k).noalias() = u.transpose() * x.segment(op.off, op.n_lo);
    y.segment(op.off, op.n_lo).noalias() += u * w.head(op.k);
    y.segment(op.off + op.n_lo, op.n_hi).noalias() += v * w2.head(op.k);
  }
  return y;
}

Index BoundaryOperator::size() const {
  if (std::holds_alternative<Matrix>(op))
    return std::get<Matrix>(op).rows();
  return std::get<HssMatrix>(op).size();
}

BoundaryOperator boundary_operator(BlockSource& src, double eps,
                                   Index leaf_max) {
  SweepState s = run_sweep(src, nullptr, eps, leaf_max, SweepMode::BoundaryOnly);
  BoundaryOperator g;
  g.op = std::move(s.current);
  g.steps = std::move(s.steps);
  g.peak_floats = s.peak_floats;
  if (std::holds_alternative<HssMatrix>(g.op))
    g.plan = ApplyPlan(std::get<HssMatrix>(g.op), eps);
  else
    g.plan = ApplyPlan(std::get<Matrix>(g.op));
  return g;
}

BoundaryOperator boundary_operator(const BlockSystem& b, double eps,
                                   Index leaf_max) {
  BlockSystemSource src(b);
  return boundary_operator(src, eps, leaf_max);
}

Vector apply_boundary_solve(const BoundaryOperator& g, const Vector& load) {
  if (load.size() != g.size())
    throw std::invalid_argument("apply_boundary_solve: length mismatch");
  if (!g.plan.empty()) return g.plan.apply(load);
  return inverse_apply(g.op, load);
}

}  // namespace gridhss

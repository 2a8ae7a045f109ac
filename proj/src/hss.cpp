#include "gridhss/hss.hpp"

#include <algorithm>
#include <utility>

#include "json.hpp"

namespace gridhss {

using Node = HssMatrix::Node;
using NodePtr = std::unique_ptr<Node>;

// ---------------------------------------------------------------------------
// SparseStencil

SparseStencil SparseStencil::zeros(Index n) {
  SparseStencil s;
  s.n = n;
  s.main = Vector::Zero(n);
  s.sub = Vector::Zero(std::max<Index>(n - 1, 0));
  s.super = Vector::Zero(std::max<Index>(n - 1, 0));
  return s;
}

void SparseStencil::validate() const {
  if (main.size() != n || sub.size() != std::max<Index>(n - 1, 0) ||
      super.size() != std::max<Index>(n - 1, 0))
    throw std::invalid_argument("SparseStencil: band sizes inconsistent with n");
  for (const Entry& e : extras)
    if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n)
      throw std::invalid_argument("SparseStencil: extra entry out of range");
}

Matrix SparseStencil::dense() const {
  validate();
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = main[i];
  for (Index i = 0; i + 1 < n; ++i) {
    m(i + 1, i) += sub[i];
    m(i, i + 1) += super[i];
  }
  for (const Entry& e : extras) m(e.row, e.col) += e.value;
  return m;
}

Vector SparseStencil::apply(const Vector& x) const {
  if (x.size() != n)
    throw std::invalid_argument("SparseStencil::apply: length mismatch");
  Vector y = main.cwiseProduct(x);
  for (Index i = 0; i + 1 < n; ++i) {
    y[i + 1] += sub[i] * x[i];
    y[i] += super[i] * x[i + 1];
  }
  for (const Entry& e : extras) y[e.row] += e.value * x[e.col];
  return y;
}

Index SparseStencil::entry_count() const {
  return n + 2 * std::max<Index>(n - 1, 0) +
         static_cast<Index>(extras.size());
}

// ---------------------------------------------------------------------------
// Tree plumbing

NodePtr Node::clone() const {
  auto out = std::make_unique<Node>();
  out->n = n;
  if (is_leaf()) {
    out->block = block;
  } else {
    out->lo = lo->clone();
    out->hi = hi->clone();
    out->upper = upper;
    out->lower = lower;
  }
  return out;
}

HssMatrix::HssMatrix(NodePtr root, Index leaf_max, double eps)
    : root_(std::move(root)), leaf_max_(leaf_max), eps_(eps) {}

namespace {

using MatRef = Eigen::Ref<Matrix, 0, Eigen::OuterStride<>>;
using ConstMatRef = Eigen::Ref<const Matrix, 0, Eigen::OuterStride<>>;

NodePtr make_leaf(Matrix block) {
  auto node = std::make_unique<Node>();
  node->n = block.rows();
  node->block = std::move(block);
  return node;
}

NodePtr make_branch(NodePtr lo, NodePtr hi, LowRankFactor upper,
                    LowRankFactor lower) {
  auto node = std::make_unique<Node>();
  node->n = lo->n + hi->n;
  node->lo = std::move(lo);
  node->hi = std::move(hi);
  node->upper = std::move(upper);
  node->lower = std::move(lower);
  return node;
}

NodePtr build_from_dense(const ConstMatRef& m, Index leaf_max,
                         double eps) {
  const Index n = m.rows();
  if (n <= leaf_max) return make_leaf(m);
  const Index mid = n / 2;
  return make_branch(
      build_from_dense(m.topLeftCorner(mid, mid), leaf_max, eps),
      build_from_dense(m.bottomRightCorner(n - mid, n - mid), leaf_max, eps),
      truncated_factor(m.topRightCorner(mid, n - mid), eps),
      truncated_factor(m.bottomLeftCorner(n - mid, mid), eps));
}

NodePtr build_zero(Index n, Index leaf_max) {
  if (n <= leaf_max) return make_leaf(Matrix::Zero(n, n));
  const Index mid = n / 2;
  return make_branch(build_zero(mid, leaf_max), build_zero(n - mid, leaf_max),
                     LowRankFactor::zero(mid, n - mid),
                     LowRankFactor::zero(n - mid, mid));
}

void densify_into(const Node& node, MatRef out) {
  if (node.is_leaf()) {
    out = node.block;
    return;
  }
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  densify_into(*node.lo, out.topLeftCorner(nl, nl));
  densify_into(*node.hi, out.bottomRightCorner(nh, nh));
  out.topRightCorner(nl, nh) = node.upper.dense();
  out.bottomLeftCorner(nh, nl) = node.lower.dense();
}

Matrix node_apply(const Node& node, const ConstMatRef& x) {
  if (node.is_leaf()) return node.block * x;
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  Matrix y(node.n, x.cols());
  y.topRows(nl) = node_apply(*node.lo, x.topRows(nl));
  y.bottomRows(nh) = node_apply(*node.hi, x.bottomRows(nh));
  if (node.upper.rank() > 0)
    y.topRows(nl).noalias() +=
        node.upper.left * (node.upper.right.transpose() * x.bottomRows(nh));
  if (node.lower.rank() > 0)
    y.bottomRows(nh).noalias() +=
        node.lower.left * (node.lower.right.transpose() * x.topRows(nl));
  return y;
}

Matrix node_apply_transpose(const Node& node,
                            const ConstMatRef& x) {
  if (node.is_leaf()) return node.block.transpose() * x;
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  Matrix y(node.n, x.cols());
  y.topRows(nl) = node_apply_transpose(*node.lo, x.topRows(nl));
  y.bottomRows(nh) = node_apply_transpose(*node.hi, x.bottomRows(nh));
  if (node.upper.rank() > 0)
    y.bottomRows(nh).noalias() +=
        node.upper.right * (node.upper.left.transpose() * x.topRows(nl));
  if (node.lower.rank() > 0)
    y.topRows(nl).noalias() +=
        node.lower.right * (node.lower.left.transpose() * x.bottomRows(nh));
  return y;
}

NodePtr lowrank_update_node(const Node& node,
                            const ConstMatRef& fl,
                            const ConstMatRef& fr, double eps) {
  if (fl.cols() == 0) return node.clone();
  if (node.is_leaf()) {
    Matrix block = node.block;
    block.noalias() += fl * fr.transpose();
    return make_leaf(std::move(block));
  }
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  LowRankFactor upper =
      lr_add(node.upper, {fl.topRows(nl), fr.bottomRows(nh)}, eps);
  LowRankFactor lower =
      lr_add(node.lower, {fl.bottomRows(nh), fr.topRows(nl)}, eps);
  return make_branch(lowrank_update_node(*node.lo, fl.topRows(nl),
                                         fr.topRows(nl), eps),
                     lowrank_update_node(*node.hi, fl.bottomRows(nh),
                                         fr.bottomRows(nh), eps),
                     std::move(upper), std::move(lower));
}

// Rank-small factor assembled from explicit entries, local to a block whose
// rows start at row_base and columns at col_base.
LowRankFactor entries_factor(const std::vector<SparseStencil::Entry>& entries,
                             Index rows, Index cols, Index row_base,
                             Index col_base) {
  const Index k = static_cast<Index>(entries.size());
  Matrix u = Matrix::Zero(rows, k);
  Matrix v = Matrix::Zero(cols, k);
  for (Index j = 0; j < k; ++j) {
    const auto& e = entries[static_cast<std::size_t>(j)];
    u(e.row - row_base, j) = e.value;
    v(e.col - col_base, j) = 1.0;
  }
  return {std::move(u), std::move(v)};
}

NodePtr add_stencil_node(const Node& node, Index off, const SparseStencil& s,
                         double eps) {
  const Index end = off + node.n;
  if (node.is_leaf()) {
    Matrix block = node.block;
    for (Index i = off; i < end; ++i)
      if (s.main[i] != 0.0) block(i - off, i - off) += s.main[i];
    for (Index i = off; i + 1 < end; ++i) {
      if (s.sub[i] != 0.0) block(i + 1 - off, i - off) += s.sub[i];
      if (s.super[i] != 0.0) block(i - off, i + 1 - off) += s.super[i];
    }
    for (const auto& e : s.extras)
      if (e.row >= off && e.row < end && e.col >= off && e.col < end &&
          e.value != 0.0)
        block(e.row - off, e.col - off) += e.value;
    return make_leaf(std::move(block));
  }

  const Index mid = off + node.lo->n;
  std::vector<SparseStencil::Entry> up_entries, low_entries;
  if (s.super[mid - 1] != 0.0)
    up_entries.push_back({mid - 1, mid, s.super[mid - 1]});
  if (s.sub[mid - 1] != 0.0) low_entries.push_back({mid, mid - 1, s.sub[mid - 1]});
  for (const auto& e : s.extras) {
    if (e.value == 0.0) continue;
    if (e.row >= off && e.row < mid && e.col >= mid && e.col < end)
      up_entries.push_back(e);
    else if (e.col >= off && e.col < mid && e.row >= mid && e.row < end)
      low_entries.push_back(e);
  }

  LowRankFactor upper = node.upper;
  LowRankFactor lower = node.lower;
  if (!up_entries.empty())
    upper = lr_add(upper,
                   entries_factor(up_entries, node.lo->n, node.hi->n, off, mid),
                   eps);
  if (!low_entries.empty())
    lower = lr_add(lower,
                   entries_factor(low_entries, node.hi->n, node.lo->n, mid, off),
                   eps);
  return make_branch(add_stencil_node(*node.lo, off, s, eps),
                     add_stencil_node(*node.hi, mid, s, eps), std::move(upper),
                     std::move(lower));
}

NodePtr scale_node(const Node& node, const Vector& dl, const Vector& dr,
                   Index off) {
  if (node.is_leaf()) {
    Matrix block = dl.segment(off, node.n).asDiagonal() * node.block *
                   dr.segment(off, node.n).asDiagonal();
    return make_leaf(std::move(block));
  }
  const Index nl = node.lo->n;
  const Index nh = node.hi->n;
  LowRankFactor upper = node.upper;
  LowRankFactor lower = node.lower;
  if (upper.rank() > 0) {
    upper.left = dl.segment(off, nl).asDiagonal() * upper.left;
    upper.right = dr.segment(off + nl, nh).asDiagonal() * upper.right;
  }
  if (lower.rank() > 0) {
    lower.left = dl.segment(off + nl, nh).asDiagonal() * lower.left;
    lower.right = dr.segment(off, nl).asDiagonal() * lower.right;
  }
  return make_branch(scale_node(*node.lo, dl, dr, off),
                     scale_node(*node.hi, dl, dr, off + nl), std::move(upper),
                     std::move(lower));
}

// Scatter of factor rows onto a widened index set.
Matrix scatter_rows(const Matrix& rows_in, const std::vector<Index>& map,
                    Index old_off, Index new_begin, Index new_size) {
  Matrix out = Matrix::Zero(new_size, rows_in.cols());
  for (Index i = 0; i < rows_in.rows(); ++i)
    out.row(map[static_cast<std::size_t>(old_off + i)] - new_begin) =
        rows_in.row(i);
  return out;
}

NodePtr embed_node(const Node& node, Index old_off,
                   const std::vector<Index>& map, Index new_begin,
                   Index new_end) {
  const Index new_n = new_end - new_begin;
  if (node.is_leaf()) {
    Matrix block = Matrix::Zero(new_n, new_n);
    for (Index i = 0; i < node.n; ++i) {
      const Index r = map[static_cast<std::size_t>(old_off + i)] - new_begin;
      for (Index j = 0; j < node.n; ++j)
        block(r, map[static_cast<std::size_t>(old_off + j)] - new_begin) =
            node.block(i, j);
    }
    return make_leaf(std::move(block));
  }
  const Index old_mid = old_off + node.lo->n;
  const Index new_mid = map[static_cast<std::size_t>(old_mid)];
  const Index nl = new_mid - new_begin;
  const Index nh = new_end - new_mid;
  LowRankFactor upper = LowRankFactor::zero(nl, nh);
  LowRankFactor lower = LowRankFactor::zero(nh, nl);
  if (node.upper.rank() > 0)
    upper = {scatter_rows(node.upper.left, map, old_off, new_begin, nl),
             scatter_rows(node.upper.right, map, old_mid, new_mid, nh)};
  if (node.lower.rank() > 0)
    lower = {scatter_rows(node.lower.left, map, old_mid, new_mid, nh),
             scatter_rows(node.lower.right, map, old_off, new_begin, nl)};
  return make_branch(embed_node(*node.lo, old_off, map, new_begin, new_mid),
                     embed_node(*node.hi, old_mid, map, new_mid, new_end),
                     std::move(upper), std::move(lower));
}

void stats_node(const Node& node, Index depth, HssStats& s) {
  s.depth = std::max(s.depth, depth);
  if (node.is_leaf()) {
    s.total_floats += node.n * node.n;
    s.max_leaf = std::max(s.max_leaf, node.n);
    return;
  }
  s.max_rank = std::max({s.max_rank, node.upper.rank(), node.lower.rank()});
  s.total_floats += node.upper.left.size() + node.upper.right.size() +
                    node.lower.left.size() + node.lower.right.size();
  stats_node(*node.lo, depth + 1, s);
  stats_node(*node.hi, depth + 1, s);
}

void block_dense_into(const Node& node, Index off, Index r0, Index r1,
                      Index c0, Index c1, MatRef out) {
  const Index end = off + node.n;
  const Index ra = std::max(r0, off), rb = std::min(r1, end);
  const Index ca = std::max(c0, off), cb = std::min(c1, end);
  if (ra >= rb || ca >= cb) return;
  if (node.is_leaf()) {
    out.block(ra - r0, ca - c0, rb - ra, cb - ca) +=
        node.block.block(ra - off, ca - off, rb - ra, cb - ca);
    return;
  }
  const Index mid = off + node.lo->n;
  if (node.upper.rank() > 0) {
    const Index ura = ra, urb = std::min(rb, mid);
    const Index uca = std::max(ca, mid), ucb = cb;
    if (ura < urb && uca < ucb)
      out.block(ura - r0, uca - c0, urb - ura, ucb - uca).noalias() +=
          node.upper.left.middleRows(ura - off, urb - ura) *
          node.upper.right.middleRows(uca - mid, ucb - uca).transpose();
  }
  if (node.lower.rank() > 0) {
    const Index lra = std::max(ra, mid), lrb = rb;
    const Index lca = ca, lcb = std::min(cb, mid);
    if (lra < lrb && lca < lcb)
      out.block(lra - r0, lca - c0, lrb - lra, lcb - lca).noalias() +=
          node.lower.left.middleRows(lra - mid, lrb - lra) *
          node.lower.right.middleRows(lca - off, lcb - lca).transpose();
  }
  block_dense_into(*node.lo, off, r0, r1, c0, c1, out);
  block_dense_into(*node.hi, mid, r0, r1, c0, c1, out);
}

struct FactorPiece {
  Index r_off, c_off;
  LowRankFactor f;
};

void collect_lowrank_pieces(const Node& node, Index off, Index r0, Index r1,
                            Index c0, Index c1,
                            std::vector<FactorPiece>& pieces) {
  const Index end = off + node.n;
  const Index ra = std::max(r0, off), rb = std::min(r1, end);
  const Index ca = std::max(c0, off), cb = std::min(c1, end);
  if (ra >= rb || ca >= cb) return;
  if (node.is_leaf()) {
    Matrix sub = node.block.block(ra - off, ca - off, rb - ra, cb - ca);
    LowRankFactor f =
        (sub.cols() <= sub.rows())
            ? LowRankFactor{std::move(sub),
                            Matrix(Matrix::Identity(cb - ca, cb - ca))}
            : LowRankFactor{Matrix(Matrix::Identity(rb - ra, rb - ra)),
                            Matrix(sub.transpose())};
    pieces.push_back({ra - r0, ca - c0, std::move(f)});
    return;
  }
  const Index mid = off + node.lo->n;
  if (node.upper.rank() > 0) {
    const Index ura = ra, urb = std::min(rb, mid);
    const Index uca = std::max(ca, mid), ucb = cb;
    if (ura < urb && uca < ucb)
      pieces.push_back(
          {ura - r0, uca - c0,
           {node.upper.left.middleRows(ura - off, urb - ura),
            node.upper.right.middleRows(uca - mid, ucb - uca)}});
  }
  if (node.lower.rank() > 0) {
    const Index lra = std::max(ra, mid), lrb = rb;
    const Index lca = ca, lcb = std::min(cb, mid);
    if (lra < lrb && lca < lcb)
      pieces.push_back(
          {lra - r0, lca - c0,
           {node.lower.left.middleRows(lra - mid, lrb - lra),
            node.lower.right.middleRows(lca - off, lcb - lca)}});
  }
  collect_lowrank_pieces(*node.lo, off, r0, r1, c0, c1, pieces);
  collect_lowrank_pieces(*node.hi, mid, r0, r1, c0, c1, pieces);
}

NodePtr retess_node(const HssMatrix& h, Index b, Index e, Index leaf_max,
                    double eps) {
  const Index n = e - b;
  if (n <= leaf_max) return make_leaf(hss_block_dense(h, b, e, b, e));
  const Index mid = b + n / 2;
  return make_branch(retess_node(h, b, mid, leaf_max, eps),
                     retess_node(h, mid, e, leaf_max, eps),
                     hss_block_lowrank(h, b, mid, mid, e, eps),
                     hss_block_lowrank(h, mid, e, b, mid, eps));
}

NodePtr invert_node(const Node& node, double eps) {
  if (node.is_leaf()) return make_leaf(dense_invert(node.block));

  NodePtr x22 = invert_node(*node.hi, eps);
  const Index ku = node.upper.rank();
  const Index kl = node.lower.rank();

  // Y11 = A11 - A12 X22 A21, a rank-min(ku, kl) downdate of A11.
  Matrix x22_ul;  // X22 * Ul, reused for B21 and the B22 update
  NodePtr y11;
  if (ku > 0 && kl > 0) {
    x22_ul = node_apply(*x22, node.lower.left);
    Matrix w = node.upper.right.transpose() * x22_ul;  // ku x kl
    Matrix fl = -node.upper.left * w;                  // lo x kl
    y11 = lowrank_update_node(*node.lo, fl, node.lower.right, eps);
  } else {
    if (kl > 0) x22_ul = node_apply(*x22, node.lower.left);
    y11 = node.lo->clone();
  }
  NodePtr x11 = invert_node(*y11, eps);
  y11.reset();

  LowRankFactor b12 = LowRankFactor::zero(node.lo->n, node.hi->n);
  LowRankFactor b21 = LowRankFactor::zero(node.hi->n, node.lo->n);
  Matrix x11_uu, x22t_vu;
  if (ku > 0) {
    x11_uu = node_apply(*x11, node.upper.left);
    x22t_vu = node_apply_transpose(*x22, node.upper.right);
    b12 = lr_recompress({-x11_uu, x22t_vu}, eps);
  }
  if (kl > 0) {
    Matrix x11t_vl = node_apply_transpose(*x11, node.lower.right);
    b21 = lr_recompress({-x22_ul, std::move(x11t_vl)}, eps);
  }
  NodePtr x22_final;
  if (ku > 0 && kl > 0) {
    Matrix s = node.lower.right.transpose() * x11_uu;  // kl x ku
    Matrix u = x22_ul * s;                             // hi x ku
    x22_final = lowrank_update_node(*x22, u, x22t_vu, eps);
  } else {
    x22_final = std::move(x22);
  }
  return make_branch(std::move(x11), std::move(x22_final), std::move(b12),
                     std::move(b21));
}

void dump_node(const Node& node, Index off, nlohmann::json& j) {
  j["n"] = node.n;
  j["range"] = {off, off + node.n};
  if (node.is_leaf()) {
    j["leaf"] = true;
    return;
  }
  j["leaf"] = false;
  j["upper_rank"] = node.upper.rank();
  j["lower_rank"] = node.lower.rank();
  dump_node(*node.lo, off, j["lo"]);
  dump_node(*node.hi, off + node.lo->n, j["hi"]);
}

void check_position_map(Index n, Index target,
                        const std::vector<Index>& map) {
  if (static_cast<Index>(map.size()) != n)
    throw std::invalid_argument("hss_embed: position map length mismatch");
  Index prev = -1;
  for (Index p : map) {
    if (p <= prev || p >= target)
      throw std::invalid_argument(
          "hss_embed: position map must be strictly increasing and in range");
    prev = p;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations

HssMatrix hss_from_dense(const Matrix& m, Index leaf_max, double eps) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("hss_from_dense: matrix must be square");
  if (leaf_max < 1) throw std::invalid_argument("hss_from_dense: leaf_max < 1");
  return HssMatrix(build_from_dense(m, leaf_max, eps), leaf_max, eps);
}

HssMatrix hss_zero(Index n, Index leaf_max, double eps) {
  if (leaf_max < 1) throw std::invalid_argument("hss_zero: leaf_max < 1");
  return HssMatrix(build_zero(n, leaf_max), leaf_max, eps);
}

Matrix hss_densify(const HssMatrix& h, Index size_cap) {
  if (h.size() > size_cap)
    throw std::invalid_argument("hss_densify: size exceeds cap");
  Matrix out(h.size(), h.size());
  if (h.size() > 0) densify_into(h.root(), out);
  return out;
}

Vector hss_matvec(const HssMatrix& h, const Vector& x) {
  if (x.size() != h.size())
    throw std::invalid_argument("hss_matvec: length mismatch");
  return node_apply(h.root(), x);
}

Vector hss_matvec_transpose(const HssMatrix& h, const Vector& x) {
  if (x.size() != h.size())
    throw std::invalid_argument("hss_matvec_transpose: length mismatch");
  return node_apply_transpose(h.root(), x);
}

Matrix hss_apply_thin(const HssMatrix& h, const Matrix& x) {
  if (x.rows() != h.size())
    throw std::invalid_argument("hss_apply_thin: shape mismatch");
  return node_apply(h.root(), x);
}

Matrix hss_apply_thin_transpose(const HssMatrix& h, const Matrix& x) {
  if (x.rows() != h.size())
    throw std::invalid_argument("hss_apply_thin_transpose: shape mismatch");
  return node_apply_transpose(h.root(), x);
}

HssMatrix hss_lowrank_update(const HssMatrix& h, const LowRankFactor& f,
                             double eps) {
  if (f.rows() != h.size() || f.cols() != h.size())
    throw std::invalid_argument("hss_lowrank_update: shape mismatch");
  return HssMatrix(lowrank_update_node(h.root(), f.left, f.right, eps),
                   h.leaf_max(), h.eps());
}

HssMatrix hss_add_stencil(const HssMatrix& h, const SparseStencil& s,
                          double eps) {
  s.validate();
  if (s.n != h.size())
    throw std::invalid_argument("hss_add_stencil: size mismatch");
  return HssMatrix(add_stencil_node(h.root(), 0, s, eps), h.leaf_max(),
                   h.eps());
}

HssMatrix hss_scale(const HssMatrix& h, const Vector& d_left,
                    const Vector& d_right) {
  if (d_left.size() != h.size() || d_right.size() != h.size())
    throw std::invalid_argument("hss_scale: length mismatch");
  return HssMatrix(scale_node(h.root(), d_left, d_right, 0), h.leaf_max(),
                   h.eps());
}

HssMatrix hss_embed_stretch(const HssMatrix& h, Index target_size,
                            const std::vector<Index>& position_map) {
  check_position_map(h.size(), target_size, position_map);
  return HssMatrix(embed_node(h.root(), 0, position_map, 0, target_size),
                   h.leaf_max(), h.eps());
}

HssMatrix hss_embed(const HssMatrix& h, Index target_size,
                    const std::vector<Index>& position_map) {
  HssMatrix out = hss_embed_stretch(h, target_size, position_map);
  if (hss_stats(out).max_leaf > 2 * h.leaf_max())
    out = hss_retessellate(out, h.leaf_max(), h.eps());
  return out;
}

HssMatrix hss_retessellate(const HssMatrix& h, Index leaf_max, double eps) {
  if (leaf_max < 1)
    throw std::invalid_argument("hss_retessellate: leaf_max < 1");
  return HssMatrix(retess_node(h, 0, h.size(), leaf_max, eps), leaf_max, eps);
}

HssMatrix hss_invert(const HssMatrix& h, double eps) {
  return HssMatrix(invert_node(h.root(), eps), h.leaf_max(), eps);
}

HssStats hss_stats(const HssMatrix& h) {
  HssStats s;
  if (!h.empty()) stats_node(h.root(), 0, s);
  return s;
}

std::string hss_dump_json(const HssMatrix& h) {
  nlohmann::json j;
  j["size"] = h.size();
  j["leaf_max"] = h.leaf_max();
  j["eps"] = h.eps();
  if (!h.empty()) dump_node(h.root(), 0, j["tree"]);
  return j.dump();
}

Matrix hss_block_dense(const HssMatrix& h, Index r0, Index r1, Index c0,
                       Index c1) {
  if (r0 < 0 || r1 > h.size() || c0 < 0 || c1 > h.size() || r0 > r1 || c0 > c1)
    throw std::invalid_argument("hss_block_dense: range out of bounds");
  Matrix out = Matrix::Zero(r1 - r0, c1 - c0);
  if (out.size() > 0) block_dense_into(h.root(), 0, r0, r1, c0, c1, out);
  return out;
}

LowRankFactor hss_block_lowrank(const HssMatrix& h, Index r0, Index r1,
                                Index c0, Index c1, double eps) {
  if (r0 < 0 || r1 > h.size() || c0 < 0 || c1 > h.size() || r0 > r1 || c0 > c1)
    throw std::invalid_argument("hss_block_lowrank: range out of bounds");
  if (std::max(r0, c0) < std::min(r1, c1))
    throw std::invalid_argument("hss_block_lowrank: ranges must be disjoint");
  std::vector<FactorPiece> pieces;
  collect_lowrank_pieces(h.root(), 0, r0, r1, c0, c1, pieces);
  Index total_rank = 0;
  for (const auto& p : pieces) total_rank += p.f.rank();
  if (total_rank == 0) return LowRankFactor::zero(r1 - r0, c1 - c0);
  Matrix u = Matrix::Zero(r1 - r0, total_rank);
  Matrix v = Matrix::Zero(c1 - c0, total_rank);
  Index col = 0;
  for (const auto& p : pieces) {
    u.block(p.r_off, col, p.f.rows(), p.f.rank()) = p.f.left;
    v.block(p.c_off, col, p.f.cols(), p.f.rank()) = p.f.right;
    col += p.f.rank();
  }
  return lr_recompress({std::move(u), std::move(v)}, eps);
}

}  // namespace gridhss

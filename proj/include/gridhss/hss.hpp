#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gridhss/lowrank.hpp"

namespace gridhss {

// Symmetric-profile banded matrix (sub/main/super diagonals) with a handful
// of explicit extra entries, enough for the cyclic wraparound couplings of
// ring operators.
struct SparseStencil {
  Index n = 0;
  Vector main;   // n
  Vector sub;    // n-1; entry i sits at (i+1, i)
  Vector super;  // n-1; entry i sits at (i, i+1)
  struct Entry {
    Index row;
    Index col;
    double value;
  };
  std::vector<Entry> extras;

  static SparseStencil zeros(Index n);
  Matrix dense() const;
  Vector apply(const Vector& x) const;
  void validate() const;
  Index entry_count() const;
};

struct HssStats {
  Index max_rank = 0;
  Index total_floats = 0;
  Index depth = 0;
  Index max_leaf = 0;
};

// Square matrix tessellated by a binary tree: dense diagonal leaves, low-rank
// off-diagonal sibling blocks. Nodes are size-relative so any subtree is a
// self-contained matrix. Values are immutable after construction; every
// operation returns a new matrix.
class HssMatrix {
 public:
  struct Node {
    Index n = 0;
    // leaf
    Matrix block;
    // branch
    std::unique_ptr<Node> lo, hi;
    LowRankFactor upper;  // rows of lo x cols of hi
    LowRankFactor lower;  // rows of hi x cols of lo

    bool is_leaf() const { return lo == nullptr; }
    std::unique_ptr<Node> clone() const;
  };

  HssMatrix() = default;
  HssMatrix(std::unique_ptr<Node> root, Index leaf_max, double eps);
  HssMatrix(const HssMatrix& o)
      : root_(o.root_ ? o.root_->clone() : nullptr),
        leaf_max_(o.leaf_max_),
        eps_(o.eps_) {}
  HssMatrix& operator=(const HssMatrix& o) {
    if (this != &o) {
      root_ = o.root_ ? o.root_->clone() : nullptr;
      leaf_max_ = o.leaf_max_;
      eps_ = o.eps_;
    }
    return *this;
  }
  HssMatrix(HssMatrix&&) = default;
  HssMatrix& operator=(HssMatrix&&) = default;

  Index size() const { return root_ ? root_->n : 0; }
  Index leaf_max() const { return leaf_max_; }
  double eps() const { return eps_; }
  const Node& root() const { return *root_; }
  bool empty() const { return root_ == nullptr; }

 private:
  std::unique_ptr<Node> root_;
  Index leaf_max_ = 64;
  double eps_ = 0.0;
};

HssMatrix hss_from_dense(const Matrix& m, Index leaf_max, double eps);
HssMatrix hss_zero(Index n, Index leaf_max, double eps);

// Materializes the represented matrix. Refuses sizes above size_cap.
Matrix hss_densify(const HssMatrix& h, Index size_cap = 8192);

Vector hss_matvec(const HssMatrix& h, const Vector& x);
Vector hss_matvec_transpose(const HssMatrix& h, const Vector& x);
Matrix hss_apply_thin(const HssMatrix& h, const Matrix& x);
Matrix hss_apply_thin_transpose(const HssMatrix& h, const Matrix& x);

// h + f.left * f.right^T, pushed eagerly down the tree: leaf blocks absorb
// the update densely, off-diagonal factors are recompressed to eps.
HssMatrix hss_lowrank_update(const HssMatrix& h, const LowRankFactor& f,
                             double eps);

// h + s. Band entries land in leaves; entries crossing a child boundary
// become rank-1 contributions to the adjacent off-diagonal factor.
HssMatrix hss_add_stencil(const HssMatrix& h, const SparseStencil& s,
                          double eps);

// diag(d_left) * h * diag(d_right). Exact; ranks unchanged.
HssMatrix hss_scale(const HssMatrix& h, const Vector& d_left,
                    const Vector& d_right);

// Exact scatter onto a larger index set: entry (i, j) moves to
// (position_map[i], position_map[j]), everything else zero. The tree shape is
// kept (skipped positions widen leaves and factor row spaces), so no rank
// ever grows. May leave oversized leaves.
HssMatrix hss_embed_stretch(const HssMatrix& h, Index target_size,
                            const std::vector<Index>& position_map);

// Scatter followed by automatic re-tessellation once any leaf has outgrown
// 2 * leaf_max.
HssMatrix hss_embed(const HssMatrix& h, Index target_size,
                    const std::vector<Index>& position_map);

// Same represented matrix on the balanced bisection tree with the given leaf
// bound; off-diagonal blocks recompressed to eps.
HssMatrix hss_retessellate(const HssMatrix& h, Index leaf_max, double eps);

// Recursive inversion via the 2x2 block-inverse formula: invert the second
// diagonal block, fold A12 * X22 * A21 into the first as a low-rank update,
// invert that, and assemble the four blocks with low-rank off-diagonals.
HssMatrix hss_invert(const HssMatrix& h, double eps);

HssStats hss_stats(const HssMatrix& h);

// Debug dump of the tessellation (node sizes and ranks) as a JSON tree.
std::string hss_dump_json(const HssMatrix& h);

// Dense copy of the subblock [r0, r1) x [c0, c1).
Matrix hss_block_dense(const HssMatrix& h, Index r0, Index r1, Index c0,
                       Index c1);

// Low-rank factor of an off-diagonal subblock ([r0, r1) and [c0, c1) must be
// disjoint); pieces gathered from the tree and recompressed to eps.
LowRankFactor hss_block_lowrank(const HssMatrix& h, Index r0, Index r1,
                                Index c0, Index c1, double eps);

}  // namespace gridhss

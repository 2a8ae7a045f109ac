#pragma once

#include <variant>
#include <vector>

#include "gridhss/grid.hpp"

namespace gridhss {

// Full keeps every ring inverse and modified load for back-substitution.
// BoundaryOnly holds a single live inverse (the previous ring's) and rejects
// interior loads, which keeps peak memory at O(sqrt(N) log N).
enum class SweepMode { Full, BoundaryOnly };

// A ring inverse is dense below the representation threshold and HSS above.
using RingInverse = std::variant<Matrix, HssMatrix>;

Index inverse_floats(const RingInverse& inv);
Vector inverse_apply(const RingInverse& inv, const Vector& x);
Matrix inverse_dense(const RingInverse& inv, Index size_cap = 8192);

struct StepLog {
  Index ring = 0;  // 1-based kappa
  double seconds = 0.0;
  bool retessellated = false;
  Index live_floats = 0;
};

struct SweepState {
  SweepMode mode = SweepMode::Full;
  double eps = 0.0;
  Index leaf_max = 0;
  std::vector<RingInverse> inverses;  // Full mode: one per ring
  RingInverse current;                // the live ring inverse
  std::vector<Vector> loads;          // modified loads (Full: all rings)
  std::vector<StepLog> steps;
  Index peak_floats = 0;              // high-water of live representation floats
};

// One ring of the block system, streamed outward. couple is the interface to
// the previous (inner) ring; empty (inner_size == 0) for the first ring.
struct RingBlock {
  SparseStencil diag;
  InterfaceCoupling couple;
  Vector rhs;
};

// Streaming access to the assembled blocks. The sweep calls fetch(k) exactly
// once per ring, in ascending order, so entries can be generated on the fly
// or read sequentially from slow storage.
class BlockSource {
 public:
  virtual ~BlockSource() = default;
  virtual Index ring_count() const = 0;
  virtual Index ring_size(Index k) const = 0;
  virtual RingBlock fetch(Index k) = 0;
};

class BlockSystemSource final : public BlockSource {
 public:
  explicit BlockSystemSource(const BlockSystem& b) : b_(&b) {}
  Index ring_count() const override { return b_->ring_count(); }
  Index ring_size(Index k) const override {
    return b_->diag[static_cast<std::size_t>(k)].n;
  }
  RingBlock fetch(Index k) override;

 private:
  const BlockSystem* b_;
};

// Exact elimination sweep: every ring inverse is dense. O(N^2) work, kept as
// the reference path.
SweepState sweep_dense(const BlockSystem& b, const std::vector<Vector>& rhs);

// Fast sweep: ring inverses switch to the HSS representation once the ring
// outgrows 2 * leaf_max. Each step scales and embeds the previous inverse
// into the next ring's index set, folds the corner-bar cross terms in as a
// low-rank update, absorbs the ring stencil, re-tessellates if a leaf
// outgrew its bound, and inverts.
SweepState sweep_hss(const BlockSystem& b, const std::vector<Vector>& rhs,
                     double eps, Index leaf_max, SweepMode mode);

// Solution of the whole system from a completed Full-mode sweep, in spiral
// order (use spiral_to_row_major for the external layout).
Vector back_substitute(const SweepState& s, const BlockSystem& b);

// Contiguous apply plan for an SPD ring inverse. The representation is
// symmetrized, (H + H^T)/2, so one factor per branch serves both cross
// blocks; that halves the memory traffic of a repeated solve and the second
// touch of each factor stays cache-hot.
class ApplyPlan {
 public:
  ApplyPlan() = default;
  ApplyPlan(const HssMatrix& h, double eps);
  explicit ApplyPlan(const Matrix& dense);

  bool empty() const { return n_ == 0; }
  Index size() const { return n_; }
  Vector apply(const Vector& x) const;

 private:
  struct Op {
    bool leaf;
    Index off, n_lo, n_hi, k;
    std::size_t data;
  };
  void pack(const HssMatrix::Node& node, Index off, double eps);

  std::vector<double> arena_;
  std::vector<Op> ops_;
  Index n_ = 0;
  Index max_rank_ = 0;
};

// The operator mapping loads on the outermost ring to potentials on it.
struct BoundaryOperator {
  RingInverse op;
  ApplyPlan plan;  // symmetrized fast path for repeated solves
  std::vector<StepLog> steps;
  Index peak_floats = 0;

  Index size() const;
};

BoundaryOperator boundary_operator(BlockSource& src, double eps,
                                   Index leaf_max);
BoundaryOperator boundary_operator(const BlockSystem& b, double eps,
                                   Index leaf_max);

Vector apply_boundary_solve(const BoundaryOperator& g, const Vector& load);

}  // namespace gridhss

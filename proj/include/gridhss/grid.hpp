#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridhss/hss.hpp"

namespace gridhss {

// Square conduction network: an (m+2) x (m+2) grid of nodes, the outermost
// layer held at prescribed temperatures, every node joined to its four
// neighbours by a bar of positive conductivity. m must be even so the
// interior splits into concentric square rings.
struct GridNetwork {
  Index m = 0;
  // h_cond(r, g): bar joining nodes (r, g) and (r, g+1); (m+2) x (m+1).
  Matrix h_cond;
  // v_cond(g, c): bar joining nodes (g, c) and (g+1, c); (m+1) x (m+2).
  Matrix v_cond;
  // Boundary temperatures in row-major scan order of the boundary nodes:
  // full top row, then (left, right) per interior row, then full bottom row.
  Vector boundary_temps;

  Index interior_count() const { return m * m; }
  void validate() const;
};

// Conductivities drawn i.i.d. uniform on [cond_low, cond_high] from the
// seeded generator; the stream order is horizontal bars row-major, then
// vertical bars row-major. Boundary temperatures start at zero.
GridNetwork build_grid(Index m, std::uint64_t seed, double cond_low,
                       double cond_high);

// Interface between consecutive rings. Every inner node is mapped to exactly
// one outer neighbour (strictly increasing in ring order); the four inner
// corners touch the outer ring twice, and their second bar is kept as an
// explicit extra.
struct InterfaceGeometry {
  std::vector<Index> outward;  // inner local pos -> outer local pos
  struct CornerBar {
    Index inner_pos;
    Index outer_pos;
  };
  std::vector<CornerBar> corner_bars;
};

// Concentric-ring partition of the interior in spiral order: ring 1 is the
// innermost 2x2 block, ring m/2 the outermost. Within a ring the order starts
// at the top-left node and runs clockwise, so consecutive nodes share a bar
// and the ring closes into a loop.
struct RingPartition {
  Index m = 0;
  std::vector<std::vector<Index>> rings;  // row-major interior indices
  std::vector<Index> perm;                // spiral -> row-major
  std::vector<Index> inv_perm;            // row-major -> spiral
  std::vector<InterfaceGeometry> interfaces;  // [k]: ring k+1 -> ring k+2

  Index ring_count() const { return static_cast<Index>(rings.size()); }
  Index ring_size(Index k) const {  // k is 0-based
    return static_cast<Index>(rings[static_cast<std::size_t>(k)].size());
  }
};

RingPartition spiral_partition(Index m);

// The coupling block between ring k+1 (outer, rows) and ring k (inner,
// columns): one -cond entry per bar, at (outward[u], u) for mapped bars and
// (outer_pos, inner_pos) for the corner extras.
struct InterfaceCoupling {
  Index inner_size = 0;
  Index outer_size = 0;
  std::vector<Index> outward;
  Vector cond;  // conductivity of the mapped bar, indexed by inner pos
  struct CornerBar {
    Index inner_pos;
    Index outer_pos;
    double cond;
  };
  std::vector<CornerBar> corners;

  // y = A_{outer,inner} * x.
  Vector apply(const Vector& x_inner) const;
  // y = A_{inner,outer} * x = A_{outer,inner}^T * x.
  Vector apply_transpose(const Vector& y_outer) const;
  Matrix dense() const;
};

// The block-tridiagonal system in ring ordering: cyclic-tridiagonal diagonal
// blocks, near-diagonal couplings, loads from the eliminated boundary.
struct BlockSystem {
  Index m = 0;
  std::vector<SparseStencil> diag;        // A_kk per ring
  std::vector<InterfaceCoupling> couple;  // [k]: ring k+2 rows x ring k+1 cols
  std::vector<Vector> rhs;                // b_k per ring

  Index ring_count() const { return static_cast<Index>(diag.size()); }
};

BlockSystem assemble_blocks(const GridNetwork& g, const RingPartition& p);

// Loads induced by the prescribed boundary temperatures: zero on inner rings,
// sum of (bar conductivity x boundary temperature) on the outermost ring.
std::vector<Vector> boundary_rhs(const GridNetwork& g, const RingPartition& p);

// Spiral-order vector -> row-major interior vector, and back.
Vector spiral_to_row_major(const RingPartition& p, const Vector& x);
Vector row_major_to_spiral(const RingPartition& p, const Vector& x);

// Network file format: JSON object {m, h_cond, v_cond, boundary_temps} with
// flat row-major arrays. The reader validates shapes and positivity.
std::string write_network_json(const GridNetwork& g);
GridNetwork read_network_json(const std::string& text);

}  // namespace gridhss

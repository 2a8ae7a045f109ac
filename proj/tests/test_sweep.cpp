#include "doctest.h"

#include <cmath>

#include "gridhss/grid.hpp"
#include "gridhss/bench.hpp"
#include "gridhss/sweep.hpp"
#include "support.hpp"

using namespace gridhss;

namespace {

GridNetwork loaded_grid(Index m, std::uint64_t seed) {
  GridNetwork g = build_grid(m, seed, 1.0, 2.0);
  Rng64 rng(seed + 1000);
  g.boundary_temps = random_vector(4 * (m + 1), rng, 0.0, 2.0);
  return g;
}

Vector solve_row_major(const GridNetwork& g) {
  testsupport::RowMajorSystem sys = testsupport::row_major_assembly(g);
  return testsupport::elimination_solve(sys.a, sys.b);
}

// Brute-force Schur complement of the outermost ring via dense elimination of
// all interior rings at once.
Matrix brute_force_outer_schur(const GridNetwork& g, const RingPartition& p) {
  testsupport::RowMajorSystem sys = testsupport::row_major_assembly(g);
  const Index n = g.m * g.m;
  const Index nb = p.ring_size(p.ring_count() - 1);
  const Index ni = n - nb;
  // Spiral ordering puts the outer ring last.
  Matrix perm(n, n);
  perm.setZero();
  for (Index s = 0; s < n; ++s) perm(s, p.perm[static_cast<std::size_t>(s)]) = 1.0;
  Matrix a = perm * sys.a * perm.transpose();
  Matrix aii = a.topLeftCorner(ni, ni);
  Matrix aib = a.topRightCorner(ni, nb);
  Matrix abi = a.bottomLeftCorner(nb, ni);
  Matrix abb = a.bottomRightCorner(nb, nb);
  Eigen::LLT<Matrix> llt(aii);
  REQUIRE(llt.info() == Eigen::Success);
  return abb - abi * llt.solve(aib);
}

class CountingSource final : public BlockSource {
 public:
  explicit CountingSource(const BlockSystem& b) : inner_(b) {
    fetches_.assign(static_cast<std::size_t>(b.ring_count()), 0);
  }
  Index ring_count() const override { return inner_.ring_count(); }
  Index ring_size(Index k) const override { return inner_.ring_size(k); }
  RingBlock fetch(Index k) override {
    ++fetches_[static_cast<std::size_t>(k)];
    return inner_.fetch(k);
  }
  const std::vector<int>& fetches() const { return fetches_; }

 private:
  BlockSystemSource inner_;
  std::vector<int> fetches_;
};

}  // namespace

TEST_CASE("sweep_dense: m=2 single step equals A11 inverse") {
  GridNetwork g = loaded_grid(2, 1);
  RingPartition p = spiral_partition(2);
  BlockSystem b = assemble_blocks(g, p);
  SweepState s = sweep_dense(b, b.rhs);
  REQUIRE(s.inverses.size() == 1);
  Matrix inv = inverse_dense(s.inverses[0]);
  CHECK(max_abs(inv * b.diag[0].dense() - Matrix::Identity(4, 4)) < 1e-13);
}

TEST_CASE("sweep_dense: m=4 Schur complement matches one-shot elimination") {
  GridNetwork g = build_grid(4, 1, 1.0, 1.0);
  RingPartition p = spiral_partition(4);
  BlockSystem b = assemble_blocks(g, p);
  SweepState s = sweep_dense(b, b.rhs);
  Matrix tilde_a22_inv = inverse_dense(s.inverses.back());
  Matrix oracle = brute_force_outer_schur(g, p);
  CHECK(max_abs(dense_invert(tilde_a22_inv) - oracle) < 1e-10);
}

TEST_CASE("sweep_dense: full pipeline matches direct dense solve") {
  for (Index m : {2, 4, 6, 8, 10}) {
    for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
      GridNetwork g = loaded_grid(m, seed);
      RingPartition p = spiral_partition(m);
      BlockSystem b = assemble_blocks(g, p);
      SweepState s = sweep_dense(b, b.rhs);
      Vector x = spiral_to_row_major(p, back_substitute(s, b));
      Vector oracle = solve_row_major(g);
      CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
    }
  }
}

TEST_CASE("back_substitute: constant boundary gives constant solution") {
  const Index m = 10;
  GridNetwork g = build_grid(m, 4, 1.0, 2.0);
  const double t = 3.25;
  g.boundary_temps.setConstant(t);
  RingPartition p = spiral_partition(m);
  BlockSystem b = assemble_blocks(g, p);
  Vector x = back_substitute(sweep_dense(b, b.rhs), b);
  CHECK(max_abs(Matrix(x.array() - t)) <= 1e-9);
}

TEST_CASE("back_substitute: mode mismatch raises") {
  GridNetwork g = loaded_grid(4, 2);
  RingPartition p = spiral_partition(4);
  BlockSystem b = assemble_blocks(g, p);
  SweepState s = sweep_hss(b, b.rhs, 1e-8, 4, SweepMode::BoundaryOnly);
  CHECK_THROWS_AS(back_substitute(s, b), std::invalid_argument);
}

TEST_CASE("sweep_hss: small leaf_max agrees with the dense sweep") {
  GridNetwork g = build_grid(4, 11, 1.0, 2.0);
  RingPartition p = spiral_partition(4);
  BlockSystem b = assemble_blocks(g, p);
  SweepState dense = sweep_dense(b, b.rhs);
  SweepState fast = sweep_hss(b, b.rhs, 1e-7, 4, SweepMode::Full);
  Matrix gd = inverse_dense(dense.inverses.back());
  Matrix gf = inverse_dense(fast.inverses.back());
  CHECK(max_abs(gd - gf) <= 1e-6);
}

TEST_CASE("sweep_hss: m=2 degenerates to the dense path") {
  GridNetwork g = loaded_grid(2, 3);
  RingPartition p = spiral_partition(2);
  BlockSystem b = assemble_blocks(g, p);
  SweepState fast = sweep_hss(b, b.rhs, 1e-7, 64, SweepMode::Full);
  CHECK(std::holds_alternative<Matrix>(fast.inverses[0]));
  SweepState dense = sweep_dense(b, b.rhs);
  CHECK(max_abs(inverse_dense(fast.inverses[0]) -
                inverse_dense(dense.inverses[0])) == 0.0);
}

TEST_CASE("oracle equivalence: hss sweep at tight eps matches dense sweep") {
  for (Index m : {2, 4, 6, 8, 10}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      GridNetwork g = loaded_grid(m, seed);
      RingPartition p = spiral_partition(m);
      BlockSystem b = assemble_blocks(g, p);
      SweepState dense = sweep_dense(b, b.rhs);
      SweepState fast = sweep_hss(b, b.rhs, 1e-10, 8, SweepMode::Full);

      Matrix gd = inverse_dense(dense.inverses.back());
      Matrix gf = inverse_dense(fast.inverses.back());
      CHECK(max_abs(gd - gf) <= 1e-8);

      Vector xd = back_substitute(dense, b);
      Vector xf = back_substitute(fast, b);
      CHECK((xd - xf).norm() <= 1e-8 * xd.norm());
    }
  }
}

TEST_CASE("full hss solve matches the conjugate-gradient reference, m=50") {
  const Index m = 50;
  GridNetwork g = loaded_grid(m, 14);
  RingPartition p = spiral_partition(m);
  BlockSystem b = assemble_blocks(g, p);
  SweepState s = sweep_hss(b, b.rhs, 1e-7, 16, SweepMode::Full);
  Vector x = back_substitute(s, b);
  Vector rhs(m * m);
  Index off = 0;
  for (const auto& blk : b.rhs) {
    rhs.segment(off, blk.size()) = blk;
    off += blk.size();
  }
  Vector ref = cg_reference(b, rhs, 1e-12);
  CHECK((x - ref).norm() <= 1e-6 * ref.norm());
}

TEST_CASE("boundary_operator: m=4 matches the dense sweep and stays symmetric") {
  GridNetwork g = build_grid(4, 21, 1.0, 2.0);
  RingPartition p = spiral_partition(4);
  BlockSystem b = assemble_blocks(g, p);
  BoundaryOperator bo = boundary_operator(b, 1e-8, 4);
  Matrix gd = inverse_dense(sweep_dense(b, b.rhs).inverses.back());
  Matrix gf = inverse_dense(bo.op);
  CHECK(max_abs(gf - gd) <= 1e-6);
  CHECK(max_abs(gf - gf.transpose()) <= 1e-6 * max_abs(gf));
}

TEST_CASE("boundary_operator: matches outer-ring entries of a full solve, m=20") {
  const Index m = 20;
  GridNetwork g = loaded_grid(m, 5);
  RingPartition p = spiral_partition(m);
  BlockSystem b = assemble_blocks(g, p);
  BoundaryOperator bo = boundary_operator(b, 1e-9, 8);

  Vector potentials = apply_boundary_solve(bo, b.rhs.back());
  Vector full = solve_row_major(g);
  Vector spiral = row_major_to_spiral(p, full);
  const Index nb = bo.size();
  Vector outer = spiral.tail(nb);
  CHECK((potentials - outer).norm() <= 1e-7 * outer.norm());

  CHECK(max_abs(apply_boundary_solve(bo, Vector::Zero(nb))) == 0.0);
  Vector u = b.rhs.back();
  Vector two = apply_boundary_solve(bo, Vector(2.0 * u));
  CHECK((two - 2.0 * potentials).norm() <= 1e-12 * two.norm());
  CHECK_THROWS_AS(apply_boundary_solve(bo, Vector::Zero(nb + 1)),
                  std::invalid_argument);
}

TEST_CASE("boundary-only sweep rejects interior loads") {
  GridNetwork g = loaded_grid(6, 6);
  RingPartition p = spiral_partition(6);
  BlockSystem b = assemble_blocks(g, p);
  std::vector<Vector> loaded = b.rhs;
  loaded[0] = Vector::Ones(4);  // load the centre ring
  CHECK_THROWS_AS(sweep_hss(b, loaded, 1e-8, 8, SweepMode::BoundaryOnly),
                  std::invalid_argument);
  // The same loads are fine in Full mode.
  CHECK_NOTHROW(sweep_hss(b, loaded, 1e-8, 8, SweepMode::Full));
}

TEST_CASE("single pass: each ring block is fetched exactly once") {
  GridNetwork g = build_grid(12, 13, 1.0, 2.0);
  RingPartition p = spiral_partition(12);
  BlockSystem b = assemble_blocks(g, p);
  CountingSource src(b);
  boundary_operator(src, 1e-7, 8);
  for (int count : src.fetches()) CHECK(count == 1);
}

TEST_CASE("boundary-only memory law: peak floats scale like m log m") {
  std::vector<double> ratio;
  for (Index m : {64, 128, 256}) {
    GridNetwork g = build_grid(m, 17, 1.0, 2.0);
    RingPartition p = spiral_partition(m);
    BlockSystem b = assemble_blocks(g, p);
    BoundaryOperator bo = boundary_operator(b, 1e-7, 64);
    ratio.push_back(double(bo.peak_floats) /
                    (double(m) * std::log2(double(m))));
  }
  const double lo = *std::min_element(ratio.begin(), ratio.end());
  const double hi = *std::max_element(ratio.begin(), ratio.end());
  CHECK(hi / lo < 8.0);  // bounded above and below across the range
}

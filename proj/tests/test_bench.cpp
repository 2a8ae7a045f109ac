#include "doctest.h"

#include <cmath>

#include "json.hpp"

#include "gridhss/bench.hpp"
#include "support.hpp"

using namespace gridhss;

namespace {

BlockSystem small_system(Index m, std::uint64_t seed) {
  GridNetwork g = build_grid(m, seed, 1.0, 2.0);
  RingPartition p = spiral_partition(m);
  return assemble_blocks(g, p);
}

Matrix block_dense(const BlockSystem& b) {
  Index n = 0;
  for (const auto& s : b.diag) n += s.n;
  Matrix a = Matrix::Zero(n, n);
  Index off = 0;
  std::vector<Index> offs;
  for (const auto& s : b.diag) {
    offs.push_back(off);
    a.block(off, off, s.n, s.n) = s.dense();
    off += s.n;
  }
  for (std::size_t k = 0; k < b.couple.size(); ++k) {
    Matrix c = b.couple[k].dense();
    a.block(offs[k + 1], offs[k], c.rows(), c.cols()) = c;
    a.block(offs[k], offs[k + 1], c.cols(), c.rows()) = c.transpose();
  }
  return a;
}

}  // namespace

TEST_CASE("block_system_apply matches the dense operator") {
  BlockSystem b = small_system(6, 2);
  Matrix a = block_dense(b);
  Rng64 rng(1);
  Vector x = random_vector(a.rows(), rng);
  CHECK((block_system_apply(b, x) - a * x).norm() <= 1e-12 * (a * x).norm());
}

TEST_CASE("cg_reference: identity system converges in one iteration") {
  BlockSystem b;
  b.m = 2;
  SparseStencil s = SparseStencil::zeros(4);
  s.main.setOnes();
  b.diag.push_back(s);
  b.rhs.push_back(Vector::Ones(4));
  CgTrace trace;
  Vector x = cg_reference(b, b.rhs[0], 1e-12, &trace);
  CHECK(trace.iterations <= 2);
  CHECK(max_abs(Matrix(x - Vector::Ones(4))) < 1e-12);
}

TEST_CASE("cg_reference: matches dense solve at m=10") {
  BlockSystem b = small_system(10, 3);
  Matrix a = block_dense(b);
  Rng64 rng(4);
  Vector rhs = random_vector(a.rows(), rng);
  Vector x = cg_reference(b, rhs, 1e-13);
  Vector oracle = testsupport::elimination_solve(a, rhs);
  CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("cg_reference: energy norm of the error is nonincreasing") {
  BlockSystem b = small_system(6, 5);
  Matrix a = block_dense(b);
  Rng64 rng(6);
  Vector rhs = random_vector(a.rows(), rng);
  Vector exact = testsupport::elimination_solve(a, rhs);
  CgTrace trace;
  trace.record_iterates = true;
  cg_reference(b, rhs, 1e-12, &trace);
  double prev = std::numeric_limits<double>::infinity();
  for (const Vector& xk : trace.iterates) {
    Vector e = xk - exact;
    const double energy = std::sqrt(e.dot(a * e));
    CHECK(energy <= prev * (1.0 + 1e-12) + 10.0 * 1e-16 * exact.norm());
    prev = energy;
  }
}

TEST_CASE("cg_reference: divergence raises NoConvergence") {
  BlockSystem b = small_system(4, 7);
  // An absurdly tight tolerance cannot be met within the iteration cap.
  Vector rhs = Vector::Ones(16);
  CHECK_THROWS_AS(cg_reference(b, rhs, 1e-300), NoConvergence);
}

TEST_CASE("brute_force_boundary_schur matches dense elimination at m=6") {
  BlockSystem b = small_system(6, 9);
  Matrix a = block_dense(b);
  const Index nb = b.diag.back().n;
  const Index ni = a.rows() - nb;
  Matrix oracle = a.bottomRightCorner(nb, nb) -
                  a.bottomLeftCorner(nb, ni) *
                      testsupport::elimination_invert(a.topLeftCorner(ni, ni)) *
                      a.topRightCorner(ni, nb);
  CHECK(max_abs(brute_force_boundary_schur(b) - oracle) < 1e-10);
}

TEST_CASE("compute_errors: exact copy of the oracle scores zero") {
  BlockSystem b = small_system(8, 11);
  BoundaryOperator fake;
  fake.op = dense_invert(brute_force_boundary_schur(b));
  ErrorMetrics e = compute_errors(fake, b, 200, 700, 1e-12, 11);
  REQUIRE(e.e1.has_value());
  REQUIRE(e.e2.has_value());
  CHECK(*e.e1 == 0.0);
  CHECK(*e.e2 == 0.0);
  REQUIRE(e.e3.has_value());
  REQUIRE(e.e4.has_value());
  CHECK(*e.e3 <= 1e-8);
  CHECK(*e.e4 <= 1e-8);
}

TEST_CASE("compute_errors: oracle caps gate the fields") {
  BlockSystem b = small_system(8, 12);
  BoundaryOperator bo = boundary_operator(b, 1e-8, 8);
  ErrorMetrics gated = compute_errors(bo, b, 4, 4, 1e-12, 12);
  CHECK(!gated.e1.has_value());
  CHECK(!gated.e3.has_value());
}

TEST_CASE("compute_errors: against an independently scripted computation, m=10") {
  BlockSystem b = small_system(10, 13);
  BoundaryOperator bo = boundary_operator(b, 1e-8, 8);
  ErrorMetrics e = compute_errors(bo, b, 200, 700, 1e-12, 13);

  Matrix a = block_dense(b);
  const Index nb = b.diag.back().n;
  const Index ni = a.rows() - nb;
  Matrix schur = a.bottomRightCorner(nb, nb) -
                 a.bottomLeftCorner(nb, ni) *
                     testsupport::elimination_invert(a.topLeftCorner(ni, ni)) *
                     a.topRightCorner(ni, nb);
  Matrix g_oracle = testsupport::elimination_invert(schur);
  Matrix g_fast = inverse_dense(bo.op);
  const double e1_script = max_abs(g_fast - g_oracle);
  REQUIRE(e.e1.has_value());
  CHECK(*e.e1 == doctest::Approx(e1_script).epsilon(1e-6));

  Rng64 rng(99);
  const double e2_script = testsupport::power_norm(g_fast - g_oracle, rng);
  REQUIRE(e.e2.has_value());
  CHECK(*e.e2 == doctest::Approx(e2_script).epsilon(0.05));
  // max-entry error never exceeds dimension times the operator-norm error
  CHECK(*e.e1 <= double(nb) * (*e.e2) * (1.0 + 1e-6));

  // e4 is e3 evaluated at the first-column direction.
  Vector e1dir = Vector::Zero(nb);
  e1dir[0] = 1.0;
  Vector rhs = Vector::Zero(a.rows());
  rhs.tail(nb) = e1dir;
  Vector ref = testsupport::elimination_solve(a, rhs).tail(nb);
  const double e4_script = (apply_boundary_solve(bo, e1dir) - ref).norm();
  REQUIRE(e.e4.has_value());
  CHECK(*e.e4 == doctest::Approx(e4_script).epsilon(1e-3));
}

TEST_CASE("bench_case: deterministic non-timing fields, m=2 degenerate") {
  BenchConfig cfg;
  cfg.sizes = {2};
  cfg.seeds = {41};
  RunReport a = bench_case(2, 41, cfg);
  RunReport bb = bench_case(2, 41, cfg);
  CHECK(a.mem_floats == bb.mem_floats);
  REQUIRE(a.errors.e1.has_value());
  CHECK(*a.errors.e1 == 0.0);  // dense path degenerate: identical to oracle
  CHECK(*a.errors.e1 == *bb.errors.e1);
  CHECK(*a.errors.e3 == *bb.errors.e3);

  BenchConfig two;
  two.sizes = {4, 8};
  two.seeds = {5};
  auto r1 = run_bench(two, false);
  auto r2 = run_bench(two, false);
  REQUIRE(r1.size() == 2);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(*r1[i].errors.e1 == *r2[i].errors.e1);
    CHECK(*r1[i].errors.e2 == *r2[i].errors.e2);
    CHECK(*r1[i].errors.e3 == *r2[i].errors.e3);
    CHECK(*r1[i].errors.e4 == *r2[i].errors.e4);
    CHECK(r1[i].mem_floats == r2[i].mem_floats);
  }
}

TEST_CASE("report serialization round trips through parsers") {
  BenchConfig cfg;
  cfg.sizes = {4};
  cfg.seeds = {3};
  RunReport r = bench_case(4, 3, cfg);
  const std::string row = report_csv_row(r);
  CHECK(std::count(row.begin(), row.end(), ',') == 11);
  auto j = nlohmann::json::parse(report_jsonl_row(r));
  CHECK(j["m"].get<Index>() == 4);
  CHECK(j["N"].get<Index>() == 16);
  CHECK(j["step_seconds"].size() == 2);
  CHECK(plot_csv_row(r).substr(0, 3) == "16,");
  CHECK(steps_csv_rows(r).find("4,3,1,") == 0);
}

TEST_CASE("config validation errors") {
  BenchConfig bad;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.sizes = {5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.sizes = {4};
  bad.eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("loglog_slope recovers exponents") {
  std::vector<double> x{64, 128, 256, 512};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.25));
  CHECK(loglog_slope(x, y) == doctest::Approx(1.25).epsilon(1e-12));
}

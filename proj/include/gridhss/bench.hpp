#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridhss/sweep.hpp"

namespace gridhss {

// Accuracy of the fast boundary operator against its oracles. Absent fields
// mean the oracle was not run at that size, never that the error is zero.
struct ErrorMetrics {
  std::optional<double> e1;  // max-entry error vs brute-force Schur inverse
  std::optional<double> e2;  // l2-operator-norm error of the same difference
  std::optional<double> e3;  // l2 error of G*r for a random unit load r
  std::optional<double> e4;  // l2 error of the first column of G
};

struct RunReport {
  Index m = 0;
  Index n = 0;  // m * m
  double eps = 0.0;
  Index leaf_max = 0;
  std::uint64_t seed = 0;
  double t_invert_s = 0.0;
  double t_apply_s = 0.0;
  Index mem_floats = 0;  // peak live representation floats, boundary-only sweep
  std::vector<double> step_seconds;
  std::vector<Index> retess_rings;
  ErrorMetrics errors;
};

struct BenchConfig {
  std::vector<Index> sizes;
  std::vector<std::uint64_t> seeds{1};
  double eps = 1e-7;
  Index leaf_max = 64;
  Index oracle_cap = 200;  // largest m for the dense Schur oracle (e1, e2)
  Index cg_cap = 700;      // largest m for the iterative oracle (e3, e4)
  double cond_low = 1.0;
  double cond_high = 2.0;
  double cg_tol = 1e-12;

  void validate() const;
};

struct CgTrace {
  Index iterations = 0;
  std::vector<double> residual_norms;
  bool record_iterates = false;
  std::vector<Vector> iterates;
};

// Conjugate gradient on the assembled block system, rhs and solution in
// spiral ordering. Relative-residual stopping rule, iteration cap 20 * m.
Vector cg_reference(const BlockSystem& b, const Vector& rhs, double tol,
                    CgTrace* trace = nullptr);

// Matrix-vector product of the full block-tridiagonal system.
Vector block_system_apply(const BlockSystem& b, const Vector& x);

// Brute-force Schur complement of the outermost ring, eliminated in one shot
// with a sparse Cholesky factorization of the interior.
Matrix brute_force_boundary_schur(const BlockSystem& b);

ErrorMetrics compute_errors(const BoundaryOperator& fast, const BlockSystem& b,
                            Index oracle_cap, Index cg_cap, double cg_tol,
                            std::uint64_t seed);

// One full measurement: build, invert, time, gather metrics.
RunReport bench_case(Index m, std::uint64_t seed, const BenchConfig& cfg);

std::vector<RunReport> run_bench(const BenchConfig& cfg, bool progress);

// Report serialization. CSV has one row per case; the plot file carries the
// scaling quantities T_invert/N, T_apply/sqrt(N), M/sqrt(N); the steps file
// has one row per elimination step.
std::string report_csv_header();
std::string report_csv_row(const RunReport& r);
std::string report_jsonl_row(const RunReport& r);
std::string plot_csv_header();
std::string plot_csv_row(const RunReport& r);
std::string steps_csv_header();
std::string steps_csv_rows(const RunReport& r);

// Least-squares slope of log(y) against log(x); the scaling exponent.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gridhss

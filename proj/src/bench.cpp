#include "gridhss/bench.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "gridhss/rng.hpp"

namespace gridhss {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Index> ring_offsets(const BlockSystem& b) {
  std::vector<Index> off{0};
  for (Index k = 0; k < b.ring_count(); ++k)
    off.push_back(off.back() + b.diag[static_cast<std::size_t>(k)].n);
  return off;
}

// Power-iteration estimate of the spectral norm of (fast - oracle).
double operator_norm_diff(const Matrix& a, const Matrix& bmat,
                          std::uint64_t seed, int iters, double rel_tol) {
  Rng64 rng(seed);
  Vector v = random_unit_vector(a.cols(), rng);
  double sigma = 0.0;
  Matrix diff = a - bmat;
  for (int it = 0; it < iters; ++it) {
    Vector w = diff.transpose() * (diff * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    v = w / nw;
    if (it > 0 && std::abs(next - sigma) <= rel_tol * next) return next;
    sigma = next;
  }
  return sigma;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", *v);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace

void BenchConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("bench: no sizes given");
  for (Index m : sizes)
    if (m < 2 || m % 2 != 0)
      throw std::invalid_argument("bench: sizes must be even integers >= 2");
  if (seeds.empty()) throw std::invalid_argument("bench: no seeds given");
  if (!(eps > 0.0)) throw std::invalid_argument("bench: eps must be positive");
  if (leaf_max < 1) throw std::invalid_argument("bench: leaf_max must be >= 1");
  if (!(cond_low > 0.0) || cond_high < cond_low)
    throw std::invalid_argument("bench: conductivity range invalid");
  if (!(cg_tol > 0.0)) throw std::invalid_argument("bench: cg tolerance invalid");
}

Vector block_system_apply(const BlockSystem& b, const Vector& x) {
  const auto off = ring_offsets(b);
  if (x.size() != off.back())
    throw std::invalid_argument("block_system_apply: length mismatch");
  Vector y = Vector::Zero(x.size());
  for (Index k = 0; k < b.ring_count(); ++k) {
    const auto& s = b.diag[static_cast<std::size_t>(k)];
    y.segment(off[static_cast<std::size_t>(k)], s.n) =
        s.apply(x.segment(off[static_cast<std::size_t>(k)], s.n));
  }
  for (std::size_t k = 0; k < b.couple.size(); ++k) {
    const auto& c = b.couple[k];
    y.segment(off[k + 1], c.outer_size) +=
        c.apply(x.segment(off[k], c.inner_size));
    y.segment(off[k], c.inner_size) +=
        c.apply_transpose(x.segment(off[k + 1], c.outer_size));
  }
  return y;
}

Vector cg_reference(const BlockSystem& b, const Vector& rhs, double tol,
                    CgTrace* trace) {
  const Index n = rhs.size();
  const double bnorm = rhs.norm();
  Vector x = Vector::Zero(n);
  if (bnorm == 0.0) return x;
  Vector r = rhs;
  Vector p = r;
  double rho = r.squaredNorm();
  const Index cap = 20 * b.m;
  auto record = [&] {
    if (!trace) return;
    trace->residual_norms.push_back(std::sqrt(rho));
    if (trace->record_iterates) trace->iterates.push_back(x);
  };
  record();
  for (Index it = 0; it < cap; ++it) {
    if (std::sqrt(rho) <= tol * bnorm) return x;
    Vector ap = block_system_apply(b, p);
    const double alpha = rho / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rho_next = r.squaredNorm();
    p = r + (rho_next / rho) * p;
    rho = rho_next;
    if (trace) trace->iterations = it + 1;
    record();
  }
  if (r.norm() <= tol * bnorm) return x;
  throw NoConvergence("cg_reference: no convergence within 20*m iterations");
}

Matrix brute_force_boundary_schur(const BlockSystem& b) {
  const auto off = ring_offsets(b);
  const Index n = off.back();
  const Index nb = b.diag.back().n;
  const Index ni = n - nb;

  // Assemble interior block, interior-boundary coupling, and boundary block
  // separately; indices below ni are interior rings, the rest the outer ring.
  std::vector<Eigen::Triplet<double>> interior;
  Matrix aib = Matrix::Zero(ni, nb);
  Matrix abb = Matrix::Zero(nb, nb);
  auto emit = [&](Index r, Index c, double v) {
    if (r < ni && c < ni) interior.emplace_back(r, c, v);
    else if (r < ni) aib(r, c - ni) += v;
    else if (c >= ni) abb(r - ni, c - ni) += v;
    // (r >= ni, c < ni) is the transpose of aib; recovered by symmetry.
  };
  for (Index k = 0; k < b.ring_count(); ++k) {
    const auto& s = b.diag[static_cast<std::size_t>(k)];
    const Index o = off[static_cast<std::size_t>(k)];
    for (Index i = 0; i < s.n; ++i) emit(o + i, o + i, s.main[i]);
    for (Index i = 0; i + 1 < s.n; ++i) {
      emit(o + i + 1, o + i, s.sub[i]);
      emit(o + i, o + i + 1, s.super[i]);
    }
    for (const auto& e : s.extras) emit(o + e.row, o + e.col, e.value);
  }
  for (std::size_t k = 0; k < b.couple.size(); ++k) {
    const auto& c = b.couple[k];
    const Index oi = off[k], oo = off[k + 1];
    for (Index u = 0; u < c.inner_size; ++u) {
      const Index t = c.outward[static_cast<std::size_t>(u)];
      emit(oo + t, oi + u, -c.cond[u]);
      emit(oi + u, oo + t, -c.cond[u]);
    }
    for (const auto& cb : c.corners) {
      emit(oo + cb.outer_pos, oi + cb.inner_pos, -cb.cond);
      emit(oi + cb.inner_pos, oo + cb.outer_pos, -cb.cond);
    }
  }
  Eigen::SparseMatrix<double> aii(ni, ni);
  aii.setFromTriplets(interior.begin(), interior.end());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(aii);
  if (llt.info() != Eigen::Success)
    throw SingularMatrix("brute_force_boundary_schur: interior not SPD");
  return abb - aib.transpose() * llt.solve(aib);
}

ErrorMetrics compute_errors(const BoundaryOperator& fast, const BlockSystem& b,
                            Index oracle_cap, Index cg_cap, double cg_tol,
                            std::uint64_t seed) {
  ErrorMetrics e;
  const Index nb = fast.size();
  const auto off = ring_offsets(b);
  const Index n = off.back();

  if (b.m <= oracle_cap) {
    Matrix g_fast = inverse_dense(fast.op, nb);
    Matrix g_oracle = dense_invert(brute_force_boundary_schur(b));
    e.e1 = max_abs(g_fast - g_oracle);
    e.e2 = operator_norm_diff(g_fast, g_oracle, seed ^ 0x9e3779b97f4a7c15ull,
                              50, 1e-3);
  }
  if (b.m <= cg_cap) {
    Rng64 rng(seed ^ 0xc2b2ae3d27d4eb4full);
    Vector r = random_unit_vector(nb, rng);
    auto reference_tail = [&](const Vector& load) {
      Vector rhs = Vector::Zero(n);
      rhs.tail(nb) = load;
      return Vector(cg_reference(b, rhs, cg_tol).tail(nb));
    };
    Vector fast_r = apply_boundary_solve(fast, r);
    e.e3 = (fast_r - reference_tail(r)).norm();
    Vector e1vec = Vector::Zero(nb);
    e1vec[0] = 1.0;
    Vector fast_c = apply_boundary_solve(fast, e1vec);
    e.e4 = (fast_c - reference_tail(e1vec)).norm();
  }
  return e;
}

RunReport bench_case(Index m, std::uint64_t seed, const BenchConfig& cfg) {
  RunReport r;
  r.m = m;
  r.n = m * m;
  r.eps = cfg.eps;
  r.leaf_max = cfg.leaf_max;
  r.seed = seed;

  GridNetwork g = build_grid(m, seed, cfg.cond_low, cfg.cond_high);
  RingPartition p = spiral_partition(m);
  BlockSystem b = assemble_blocks(g, p);

  const auto t0 = Clock::now();
  BoundaryOperator bo = boundary_operator(b, cfg.eps, cfg.leaf_max);
  r.t_invert_s = seconds_since(t0);

  for (const auto& st : bo.steps) {
    r.step_seconds.push_back(st.seconds);
    if (st.retessellated) r.retess_rings.push_back(st.ring);
  }
  r.mem_floats = bo.peak_floats;

  // Applies are microseconds-scale, so each of the 3 repetitions times a
  // calibrated batch and reports the per-apply wall time; the median is kept.
  Rng64 rng(seed ^ 0xa0761d6478bd642full);
  Vector load = random_unit_vector(bo.size(), rng);
  const auto tw = Clock::now();
  load = apply_boundary_solve(bo, load).normalized();  // warm-up
  const double t_est = std::max(seconds_since(tw), 1e-9);
  const int batch = static_cast<int>(std::clamp(1e-3 / t_est, 2.0, 4096.0));
  std::vector<double> times;
  for (int rep = 0; rep < 3; ++rep) {
    const auto ta = Clock::now();
    for (int i = 0; i < batch; ++i)
      load = apply_boundary_solve(bo, load).normalized();
    times.push_back(seconds_since(ta) / batch);
  }
  std::sort(times.begin(), times.end());
  r.t_apply_s = times[1];

  r.errors = compute_errors(bo, b, cfg.oracle_cap, cfg.cg_cap, cfg.cg_tol, seed);
  return r;
}

std::vector<RunReport> run_bench(const BenchConfig& cfg, bool progress) {
  cfg.validate();
  std::vector<RunReport> out;
  for (Index m : cfg.sizes)
    for (std::uint64_t seed : cfg.seeds) {
      if (progress)
        std::fprintf(stderr, "bench: m=%lld seed=%llu ...\n",
                     static_cast<long long>(m),
                     static_cast<unsigned long long>(seed));
      out.push_back(bench_case(m, seed, cfg));
    }
  return out;
}

std::string report_csv_header() {
  return "m,N,eps,leaf_max,seed,t_invert_s,t_apply_s,mem_floats,e1,e2,e3,e4";
}

std::string report_csv_row(const RunReport& r) {
  std::ostringstream os;
  os << r.m << ',' << r.n << ',' << fmt(r.eps) << ',' << r.leaf_max << ','
     << r.seed << ',' << fmt(r.t_invert_s) << ',' << fmt(r.t_apply_s) << ','
     << r.mem_floats << ',' << fmt_opt(r.errors.e1) << ','
     << fmt_opt(r.errors.e2) << ',' << fmt_opt(r.errors.e3) << ','
     << fmt_opt(r.errors.e4);
  return os.str();
}

std::string report_jsonl_row(const RunReport& r) {
  nlohmann::json j;
  j["m"] = r.m;
  j["N"] = r.n;
  j["eps"] = r.eps;
  j["leaf_max"] = r.leaf_max;
  j["seed"] = r.seed;
  j["t_invert_s"] = r.t_invert_s;
  j["t_apply_s"] = r.t_apply_s;
  j["mem_floats"] = r.mem_floats;
  j["step_seconds"] = r.step_seconds;
  j["retess_rings"] = r.retess_rings;
  if (r.errors.e1) j["e1"] = *r.errors.e1;
  if (r.errors.e2) j["e2"] = *r.errors.e2;
  if (r.errors.e3) j["e3"] = *r.errors.e3;
  if (r.errors.e4) j["e4"] = *r.errors.e4;
  return j.dump();
}

std::string plot_csv_header() {
  return "N,t_invert_per_N,t_apply_per_sqrtN,mem_per_sqrtN";
}

std::string plot_csv_row(const RunReport& r) {
  const double n = double(r.n);
  std::ostringstream os;
  os << r.n << ',' << fmt(r.t_invert_s / n) << ','
     << fmt(r.t_apply_s / std::sqrt(n)) << ','
     << fmt(double(r.mem_floats) / std::sqrt(n));
  return os.str();
}

std::string steps_csv_header() { return "m,seed,ring,seconds,retessellated"; }

std::string steps_csv_rows(const RunReport& r) {
  std::ostringstream os;
  for (std::size_t k = 0; k < r.step_seconds.size(); ++k) {
    const Index ring = static_cast<Index>(k) + 1;
    const bool retess =
        std::find(r.retess_rings.begin(), r.retess_rings.end(), ring) !=
        r.retess_rings.end();
    os << r.m << ',' << r.seed << ',' << ring << ',' << fmt(r.step_seconds[k])
       << ',' << (retess ? 1 : 0) << '\n';
  }
  return os.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need matching samples");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace gridhss

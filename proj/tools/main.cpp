// Command line front end: network generation, solving, scaling benchmarks,
// and a self-check suite.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridhss/bench.hpp"
#include "gridhss/rng.hpp"

namespace {

using namespace gridhss;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

Vector read_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": not a number: " + line);
    }
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_assemble(Index m, std::uint64_t seed, double cond_low, double cond_high,
                 double boundary_temp, const std::string& out) {
  GridNetwork g = build_grid(m, seed, cond_low, cond_high);
  g.boundary_temps.setConstant(boundary_temp);
  write_file(out, write_network_json(g));
  std::fprintf(stderr, "assemble: wrote %s (m=%lld, N=%lld)\n", out.c_str(),
               static_cast<long long>(m), static_cast<long long>(m * m));
  return 0;
}

int cmd_solve(const std::string& network, const std::string& temps_file,
              const std::string& mode, double eps, Index leaf_max,
              const std::string& out, const std::string& dump_tree) {
  GridNetwork g = read_network_json(read_file(network));
  if (!temps_file.empty()) {
    Vector t = read_values(temps_file);
    if (t.size() != g.boundary_temps.size())
      throw std::invalid_argument("boundary temps: expected " +
                                  std::to_string(g.boundary_temps.size()) +
                                  " values, got " + std::to_string(t.size()));
    g.boundary_temps = t;
  }
  RingPartition p = spiral_partition(g.m);
  BlockSystem b = assemble_blocks(g, p);

  std::ostringstream csv;
  RingInverse final_inverse;
  if (mode == "full") {
    SweepState s = sweep_hss(b, b.rhs, eps, leaf_max, SweepMode::Full);
    Vector x = spiral_to_row_major(p, back_substitute(s, b));
    csv << "row,col,value\n";
    for (Index i = 0; i < g.m; ++i)
      for (Index j = 0; j < g.m; ++j)
        csv << i << ',' << j << ',' << format_value(x[i * g.m + j]) << '\n';
    final_inverse = s.inverses.back();
  } else if (mode == "boundary") {
    BoundaryOperator bo = boundary_operator(b, eps, leaf_max);
    Vector potentials = apply_boundary_solve(bo, b.rhs.back());
    const auto& outer = p.rings.back();
    csv << "ring_pos,row,col,value\n";
    for (Index u = 0; u < potentials.size(); ++u) {
      const Index idx = outer[static_cast<std::size_t>(u)];
      csv << u << ',' << idx / g.m << ',' << idx % g.m << ','
          << format_value(potentials[u]) << '\n';
    }
    final_inverse = std::move(bo.op);
  } else {
    throw std::invalid_argument("mode must be 'full' or 'boundary'");
  }
  write_file(out, csv.str());
  if (!dump_tree.empty()) {
    if (std::holds_alternative<HssMatrix>(final_inverse))
      write_file(dump_tree, hss_dump_json(std::get<HssMatrix>(final_inverse)));
    else
      write_file(dump_tree, "{\"dense\": true}");
  }
  std::fprintf(stderr, "solve: wrote %s (mode=%s, eps=%g)\n", out.c_str(),
               mode.c_str(), eps);
  return 0;
}

int cmd_bench(const BenchConfig& cfg, const std::string& out,
              const std::string& jsonl, const std::string& plot_out,
              const std::string& steps_out) {
  std::vector<RunReport> reports = run_bench(cfg, true);
  std::ostringstream csv;
  csv << report_csv_header() << '\n';
  for (const auto& r : reports) csv << report_csv_row(r) << '\n';
  write_file(out, csv.str());
  if (!jsonl.empty()) {
    std::ostringstream os;
    for (const auto& r : reports) os << report_jsonl_row(r) << '\n';
    write_file(jsonl, os.str());
  }
  if (!plot_out.empty()) {
    std::ostringstream os;
    os << plot_csv_header() << '\n';
    for (const auto& r : reports) os << plot_csv_row(r) << '\n';
    write_file(plot_out, os.str());
  }
  if (!steps_out.empty()) {
    std::ostringstream os;
    os << steps_csv_header() << '\n';
    for (const auto& r : reports) os << steps_csv_rows(r);
    write_file(steps_out, os.str());
  }
  std::fprintf(stderr, "bench: wrote %s (%zu rows)\n", out.c_str(),
               reports.size());
  return 0;
}

// --- verify ---------------------------------------------------------------

struct Verifier {
  bool all_ok = true;
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? " ok " : "FAIL", name.c_str(),
                detail.empty() ? "" : ": ", detail.c_str());
    all_ok = all_ok && ok;
  }
};

double rel_l2(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

void verify_structure(Verifier& v) {
  RingPartition p4 = spiral_partition(4);
  bool sizes_ok = p4.ring_size(0) == 4 && p4.ring_size(1) == 12;
  RingPartition p12 = spiral_partition(12);
  for (Index k = 0; k < p12.ring_count(); ++k)
    sizes_ok = sizes_ok && p12.ring_size(k) == 8 * (k + 1) - 4;
  v.check("ring sizes 8k-4", sizes_ok);

  GridNetwork g = build_grid(6, 1, 1.0, 1.0);
  BlockSystem b = assemble_blocks(g, spiral_partition(6));
  bool stencil_ok = true;
  for (const auto& s : b.diag) {
    stencil_ok = stencil_ok && (s.main.array() == 4.0).all();
    stencil_ok = stencil_ok && (s.sub.array() == -1.0).all();
  }
  v.check("five-point rows 4/-1 at unit conductivity", stencil_ok);

  g.boundary_temps.setOnes();
  BlockSystem bb = assemble_blocks(g, spiral_partition(6));
  Vector ones = Vector::Ones(36);
  Vector ax = block_system_apply(bb, ones);
  Vector rhs(36);
  Index off = 0;
  for (const auto& blk : bb.rhs) {
    rhs.segment(off, blk.size()) = blk;
    off += blk.size();
  }
  v.check("constant-solution identity", (ax - rhs).norm() < 1e-12);
}

void verify_hss(Verifier& v) {
  SparseStencil s = SparseStencil::zeros(128);
  s.main.setConstant(4.0);
  s.sub.setConstant(-1.0);
  s.super.setConstant(-1.0);
  s.extras.push_back({0, 127, -1.0});
  s.extras.push_back({127, 0, -1.0});
  HssMatrix ring = hss_add_stencil(hss_zero(128, 16, 1e-7), s, 1e-7);
  Matrix rd = hss_densify(ring);
  HssMatrix rebuilt = hss_from_dense(dense_invert(rd), 16, 1e-7);
  v.check("hss round trip at 128",
          max_abs(hss_densify(rebuilt) - dense_invert(rd)) <= 1e-6);
  HssMatrix inv = hss_invert(ring, 1e-7);
  v.check("hss inversion residual at 128",
          max_abs(hss_densify(inv) * rd - Matrix::Identity(128, 128)) <= 1e-5);
}

void verify_sweep(Verifier& v, Index m, std::uint64_t seed) {
  GridNetwork g = build_grid(m, seed, 1.0, 2.0);
  Rng64 rng(seed + 17);
  g.boundary_temps = random_vector(4 * (m + 1), rng, 0.0, 2.0);
  RingPartition p = spiral_partition(m);
  BlockSystem b = assemble_blocks(g, p);

  SweepState dense = sweep_dense(b, b.rhs);
  Vector xd = back_substitute(dense, b);
  Vector xcg = cg_reference(b, [&] {
    Vector rhs(m * m);
    Index off = 0;
    for (const auto& blk : b.rhs) {
      rhs.segment(off, blk.size()) = blk;
      off += blk.size();
    }
    return rhs;
  }(), 1e-13);
  v.check("dense sweep vs cg, m=" + std::to_string(m), rel_l2(xd, xcg) <= 1e-9,
          "rel err " + std::to_string(rel_l2(xd, xcg)));

  SweepState fast = sweep_hss(b, b.rhs, 1e-10, 8, SweepMode::Full);
  Vector xf = back_substitute(fast, b);
  v.check("hss sweep vs dense sweep, m=" + std::to_string(m),
          rel_l2(xf, xd) <= 1e-8);

  BoundaryOperator bo = boundary_operator(b, 1e-8, 8);
  Matrix gd = inverse_dense(bo.op);
  v.check("boundary operator symmetry, m=" + std::to_string(m),
          max_abs(gd - gd.transpose()) <= 1e-6 * max_abs(gd));
}

void verify_errors(Verifier& v) {
  {
    BenchConfig cfg;
    cfg.sizes = {20};
    cfg.seeds = {1};
    RunReport r = bench_case(20, 1, cfg);
    v.check("e1 at m=20", r.errors.e1 && *r.errors.e1 <= 1e-6);
    v.check("e2 at m=20", r.errors.e2 && *r.errors.e2 <= 1e-5);
  }
  {
    BenchConfig cfg;
    cfg.sizes = {50};
    cfg.seeds = {1};
    cfg.oracle_cap = 0;  // skip the dense oracle here
    RunReport r = bench_case(50, 1, cfg);
    v.check("e3 at m=50", r.errors.e3 && *r.errors.e3 <= 1e-6);
    v.check("e4 at m=50", r.errors.e4 && *r.errors.e4 <= 1e-6);
  }
}

void verify_memory(Verifier& v) {
  std::vector<double> ratio;
  for (Index m : {64, 128, 256}) {
    GridNetwork g = build_grid(m, 17, 1.0, 2.0);
    BlockSystem b = assemble_blocks(g, spiral_partition(m));
    BoundaryOperator bo = boundary_operator(b, 1e-7, 64);
    ratio.push_back(double(bo.peak_floats) / (double(m) * std::log2(double(m))));
  }
  const double lo = *std::min_element(ratio.begin(), ratio.end());
  const double hi = *std::max_element(ratio.begin(), ratio.end());
  v.check("boundary-only memory ~ m log m", hi / lo < 8.0,
          "spread " + std::to_string(hi / lo));
}

int cmd_verify(const std::string& level) {
  if (level != "quick" && level != "full")
    throw std::invalid_argument("level must be 'quick' or 'full'");
  Verifier v;
  verify_structure(v);
  verify_hss(v);
  verify_sweep(v, 4, 1);
  verify_sweep(v, 6, 2);
  if (level == "full") {
    verify_sweep(v, 8, 3);
    verify_sweep(v, 10, 4);
    verify_errors(v);
    verify_memory(v);
  }
  std::printf("verify: %s\n", v.all_ok ? "all checks passed" : "FAILURES");
  return v.all_ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast direct solver for grid conduction networks"};
  app.require_subcommand(1);

  // assemble
  auto* assemble = app.add_subcommand("assemble", "generate a network file");
  Index am = 8;
  std::uint64_t aseed = 1;
  double alow = 1.0, ahigh = 2.0, atemp = 1.0;
  std::string aout;
  assemble->add_option("--m", am, "interior side length (even)")->required();
  assemble->add_option("--seed", aseed, "rng seed");
  assemble->add_option("--cond-low", alow, "lower conductivity bound");
  assemble->add_option("--cond-high", ahigh, "upper conductivity bound");
  assemble->add_option("--boundary-temp", atemp, "constant boundary temperature");
  assemble->add_option("--out", aout, "output network json")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "solve a network");
  std::string snet, stemps, smode = "full", sout, sdump;
  double seps = 1e-7;
  Index sleaf = 64;
  solve->add_option("--network", snet, "network json path")->required();
  solve->add_option("--boundary-temps", stemps,
                    "file with one temperature per line");
  solve->add_option("--mode", smode, "full | boundary");
  solve->add_option("--eps", seps, "compression tolerance")
      ->envname("GRIDHSS_EPS");
  solve->add_option("--leaf-max", sleaf, "hss leaf size bound");
  solve->add_option("--out", sout, "solution csv path")->required();
  solve->add_option("--dump-tree", sdump, "write final operator tessellation");

  // bench
  auto* bench = app.add_subcommand("bench", "scaling and accuracy benchmark");
  BenchConfig cfg;
  std::string bout, bjsonl, bplot, bsteps;
  bench->add_option("--sizes", cfg.sizes, "grid sides m")
      ->required()
      ->delimiter(',');
  bench->add_option("--seeds", cfg.seeds, "rng seeds")->delimiter(',');
  bench->add_option("--eps", cfg.eps, "compression tolerance")
      ->envname("GRIDHSS_EPS");
  bench->add_option("--leaf-max", cfg.leaf_max, "hss leaf size bound");
  bench->add_option("--oracle-cap", cfg.oracle_cap,
                    "largest m for the dense Schur oracle");
  bench->add_option("--cg-cap", cfg.cg_cap, "largest m for the cg oracle");
  bench->add_option("--cond-low", cfg.cond_low, "lower conductivity bound");
  bench->add_option("--cond-high", cfg.cond_high, "upper conductivity bound");
  bench->add_option("--out", bout, "report csv path")->required();
  bench->add_option("--jsonl", bjsonl, "report jsonl path");
  bench->add_option("--plot-out", bplot, "scaling quantities csv");
  bench->add_option("--steps-out", bsteps, "per-step timing csv");

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  std::string vlevel = "quick";
  verify->add_option("--level", vlevel, "quick | full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*assemble)
      return cmd_assemble(am, aseed, alow, ahigh, atemp, aout);
    if (*solve)
      return cmd_solve(snet, stemps, smode, seps, sleaf, sout, sdump);
    if (*bench) return cmd_bench(cfg, bout, bjsonl, bplot, bsteps);
    if (*verify) return cmd_verify(vlevel);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const SingularMatrix& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const NoConvergence& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}

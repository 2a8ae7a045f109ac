#include "gridhss/grid.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "json.hpp"

#include "gridhss/rng.hpp"

namespace gridhss {

namespace {

struct Coord {
  Index r, c;  // full-grid coordinates
  bool operator==(const Coord& o) const { return r == o.r && c == o.c; }
};

// Conductivity of the bar joining two adjacent full-grid nodes.
double bar_cond(const GridNetwork& g, Coord a, Coord b) {
  if (a.r == b.r) return g.h_cond(a.r, std::min(a.c, b.c));
  return g.v_cond(std::min(a.r, b.r), a.c);
}

bool is_boundary(const GridNetwork& g, Coord a) {
  return a.r == 0 || a.r == g.m + 1 || a.c == 0 || a.c == g.m + 1;
}

// Index into boundary_temps for a boundary node, row-major scan order.
Index boundary_index(Index m, Coord a) {
  if (a.r == 0) return a.c;
  if (a.r == m + 1) return (m + 2) + 2 * m + a.c;
  return (m + 2) + 2 * (a.r - 1) + (a.c == 0 ? 0 : 1);
}

std::array<Coord, 4> neighbours(Coord a) {
  return {Coord{a.r - 1, a.c}, Coord{a.r, a.c - 1}, Coord{a.r, a.c + 1},
          Coord{a.r + 1, a.c}};
}

// Ring level of an interior-coordinate node: 0 for the outermost ring,
// m/2 - 1 for the centre block.
Index ring_level(Index m, Index i, Index j) {
  return std::min(std::min(i, j), std::min(m - 1 - i, m - 1 - j));
}

void check_m(Index m) {
  if (m < 2 || m % 2 != 0)
    throw std::invalid_argument("grid: m must be a positive even integer >= 2");
}

}  // namespace

void GridNetwork::validate() const {
  check_m(m);
  if (h_cond.rows() != m + 2 || h_cond.cols() != m + 1 ||
      v_cond.rows() != m + 1 || v_cond.cols() != m + 2)
    throw std::invalid_argument("GridNetwork: conductivity array shapes");
  if (boundary_temps.size() != 4 * (m + 1))
    throw std::invalid_argument("GridNetwork: boundary temperature count");
  if (!(h_cond.array() > 0.0).all() || !(v_cond.array() > 0.0).all())
    throw std::invalid_argument("GridNetwork: conductivities must be positive");
  if (!h_cond.allFinite() || !v_cond.allFinite() || !boundary_temps.allFinite())
    throw std::invalid_argument("GridNetwork: non-finite values");
}

GridNetwork build_grid(Index m, std::uint64_t seed, double cond_low,
                       double cond_high) {
  check_m(m);
  if (!(cond_low > 0.0) || cond_high < cond_low)
    throw std::invalid_argument("build_grid: need 0 < cond_low <= cond_high");
  GridNetwork g;
  g.m = m;
  g.h_cond.resize(m + 2, m + 1);
  g.v_cond.resize(m + 1, m + 2);
  g.boundary_temps = Vector::Zero(4 * (m + 1));
  Rng64 rng(seed);
  for (Index r = 0; r < m + 2; ++r)
    for (Index gp = 0; gp < m + 1; ++gp)
      g.h_cond(r, gp) = rng.uniform(cond_low, cond_high);
  for (Index gp = 0; gp < m + 1; ++gp)
    for (Index c = 0; c < m + 2; ++c)
      g.v_cond(gp, c) = rng.uniform(cond_low, cond_high);
  return g;
}

RingPartition spiral_partition(Index m) {
  check_m(m);
  RingPartition p;
  p.m = m;
  const Index nrings = m / 2;
  p.rings.resize(static_cast<std::size_t>(nrings));
  p.perm.reserve(static_cast<std::size_t>(m * m));

  // ring_local[row-major] = position within its ring.
  std::vector<Index> ring_local(static_cast<std::size_t>(m * m), -1);
  for (Index k = 1; k <= nrings; ++k) {
    const Index lo = m / 2 - k;
    const Index hi = m / 2 + k - 1;
    auto& ring = p.rings[static_cast<std::size_t>(k - 1)];
    auto push = [&](Index i, Index j) {
      ring_local[static_cast<std::size_t>(i * m + j)] =
          static_cast<Index>(ring.size());
      ring.push_back(i * m + j);
    };
    for (Index j = lo; j <= hi; ++j) push(lo, j);
    for (Index i = lo + 1; i <= hi; ++i) push(i, hi);
    for (Index j = hi - 1; j >= lo; --j) push(hi, j);
    for (Index i = hi - 1; i >= lo + 1; --i) push(i, lo);
  }

  for (const auto& ring : p.rings)
    for (Index idx : ring) p.perm.push_back(idx);
  p.inv_perm.assign(static_cast<std::size_t>(m * m), -1);
  for (Index s = 0; s < m * m; ++s)
    p.inv_perm[static_cast<std::size_t>(p.perm[static_cast<std::size_t>(s)])] = s;

  // Interface maps: every inner node takes the smallest admissible outer
  // neighbour so positions stay strictly increasing; the inner corners'
  // second bars are kept aside.
  p.interfaces.resize(static_cast<std::size_t>(nrings - 1));
  for (Index k = 0; k + 1 < nrings; ++k) {
    const auto& inner = p.rings[static_cast<std::size_t>(k)];
    auto& iface = p.interfaces[static_cast<std::size_t>(k)];
    const Index outer_level = nrings - k - 2;  // ring_level of the outer ring

    Index prev = -1;
    std::vector<InterfaceGeometry::CornerBar> leftovers;
    for (Index u = 0; u < static_cast<Index>(inner.size()); ++u) {
      const Index idx = inner[static_cast<std::size_t>(u)];
      const Index i = idx / m, j = idx % m;
      std::vector<Index> cand;
      for (const Coord& nb :
           {Coord{i - 1, j}, Coord{i, j - 1}, Coord{i, j + 1}, Coord{i + 1, j}}) {
        if (nb.r < 0 || nb.r >= m || nb.c < 0 || nb.c >= m) continue;
        if (ring_level(m, nb.r, nb.c) != outer_level) continue;
        cand.push_back(ring_local[static_cast<std::size_t>(nb.r * m + nb.c)]);
      }
      std::sort(cand.begin(), cand.end());
      Index chosen = -1;
      for (Index c : cand) {
        if (chosen == -1 && c > prev) {
          chosen = c;
        } else if (c != chosen) {
          leftovers.push_back({u, c});
        }
      }
      if (chosen == -1)
        throw std::logic_error("spiral_partition: no monotone outward choice");
      iface.outward.push_back(chosen);
      prev = chosen;
    }
    iface.corner_bars = std::move(leftovers);
  }
  return p;
}

Vector InterfaceCoupling::apply(const Vector& x_inner) const {
  if (x_inner.size() != inner_size)
    throw std::invalid_argument("InterfaceCoupling::apply: length mismatch");
  Vector y = Vector::Zero(outer_size);
  for (Index u = 0; u < inner_size; ++u)
    y[outward[static_cast<std::size_t>(u)]] -= cond[u] * x_inner[u];
  for (const auto& cb : corners) y[cb.outer_pos] -= cb.cond * x_inner[cb.inner_pos];
  return y;
}

Vector InterfaceCoupling::apply_transpose(const Vector& y_outer) const {
  if (y_outer.size() != outer_size)
    throw std::invalid_argument(
        "InterfaceCoupling::apply_transpose: length mismatch");
  Vector x = Vector::Zero(inner_size);
  for (Index u = 0; u < inner_size; ++u)
    x[u] -= cond[u] * y_outer[outward[static_cast<std::size_t>(u)]];
  for (const auto& cb : corners) x[cb.inner_pos] -= cb.cond * y_outer[cb.outer_pos];
  return x;
}

Matrix InterfaceCoupling::dense() const {
  Matrix a = Matrix::Zero(outer_size, inner_size);
  for (Index u = 0; u < inner_size; ++u)
    a(outward[static_cast<std::size_t>(u)], u) = -cond[u];
  for (const auto& cb : corners) a(cb.outer_pos, cb.inner_pos) = -cb.cond;
  return a;
}

BlockSystem assemble_blocks(const GridNetwork& g, const RingPartition& p) {
  g.validate();
  if (g.m != p.m)
    throw std::invalid_argument("assemble_blocks: inconsistent m");
  const Index m = g.m;
  BlockSystem b;
  b.m = m;

  auto interior_coord = [&](Index idx) {
    return Coord{idx / m + 1, idx % m + 1};  // full-grid coordinates
  };

  for (const auto& ring : p.rings) {
    const Index n = static_cast<Index>(ring.size());
    SparseStencil s = SparseStencil::zeros(n);
    for (Index u = 0; u < n; ++u) {
      const Coord a = interior_coord(ring[static_cast<std::size_t>(u)]);
      for (const Coord& nb : neighbours(a)) s.main[u] += bar_cond(g, a, nb);
    }
    for (Index u = 0; u + 1 < n; ++u) {
      const double c =
          bar_cond(g, interior_coord(ring[static_cast<std::size_t>(u)]),
                   interior_coord(ring[static_cast<std::size_t>(u + 1)]));
      s.sub[u] = -c;
      s.super[u] = -c;
    }
    const double cw = bar_cond(g, interior_coord(ring.front()),
                               interior_coord(ring.back()));
    s.extras.push_back({0, n - 1, -cw});
    s.extras.push_back({n - 1, 0, -cw});
    b.diag.push_back(std::move(s));
  }

  for (std::size_t k = 0; k < p.interfaces.size(); ++k) {
    const auto& geom = p.interfaces[k];
    const auto& inner = p.rings[k];
    const auto& outer = p.rings[k + 1];
    InterfaceCoupling c;
    c.inner_size = static_cast<Index>(inner.size());
    c.outer_size = static_cast<Index>(outer.size());
    c.outward = geom.outward;
    c.cond.resize(c.inner_size);
    for (Index u = 0; u < c.inner_size; ++u)
      c.cond[u] = bar_cond(
          g, interior_coord(inner[static_cast<std::size_t>(u)]),
          interior_coord(
              outer[static_cast<std::size_t>(geom.outward[static_cast<std::size_t>(u)])]));
    for (const auto& cb : geom.corner_bars)
      c.corners.push_back(
          {cb.inner_pos, cb.outer_pos,
           bar_cond(g,
                    interior_coord(inner[static_cast<std::size_t>(cb.inner_pos)]),
                    interior_coord(outer[static_cast<std::size_t>(cb.outer_pos)]))});
    b.couple.push_back(std::move(c));
  }

  b.rhs = boundary_rhs(g, p);
  return b;
}

std::vector<Vector> boundary_rhs(const GridNetwork& g, const RingPartition& p) {
  g.validate();
  if (g.m != p.m) throw std::invalid_argument("boundary_rhs: inconsistent m");
  const Index m = g.m;
  std::vector<Vector> rhs;
  for (const auto& ring : p.rings)
    rhs.push_back(Vector::Zero(static_cast<Index>(ring.size())));
  const auto& outer = p.rings.back();
  Vector& load = rhs.back();
  for (Index u = 0; u < static_cast<Index>(outer.size()); ++u) {
    const Index idx = outer[static_cast<std::size_t>(u)];
    const Coord a{idx / m + 1, idx % m + 1};
    for (const Coord& nb : neighbours(a))
      if (is_boundary(g, nb))
        load[u] += bar_cond(g, a, nb) * g.boundary_temps[boundary_index(m, nb)];
  }
  return rhs;
}

Vector spiral_to_row_major(const RingPartition& p, const Vector& x) {
  if (x.size() != static_cast<Index>(p.perm.size()))
    throw std::invalid_argument("spiral_to_row_major: length mismatch");
  Vector y(x.size());
  for (Index s = 0; s < x.size(); ++s)
    y[p.perm[static_cast<std::size_t>(s)]] = x[s];
  return y;
}

Vector row_major_to_spiral(const RingPartition& p, const Vector& x) {
  if (x.size() != static_cast<Index>(p.perm.size()))
    throw std::invalid_argument("row_major_to_spiral: length mismatch");
  Vector y(x.size());
  for (Index s = 0; s < x.size(); ++s)
    y[s] = x[p.perm[static_cast<std::size_t>(s)]];
  return y;
}

std::string write_network_json(const GridNetwork& g) {
  g.validate();
  nlohmann::json j;
  j["m"] = g.m;
  auto flat = [](const Matrix& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
  };
  j["h_cond"] = flat(g.h_cond);
  j["v_cond"] = flat(g.v_cond);
  j["boundary_temps"] =
      std::vector<double>(g.boundary_temps.begin(), g.boundary_temps.end());
  return j.dump();
}

GridNetwork read_network_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("network json: ") + e.what());
  }
  GridNetwork g;
  try {
    g.m = j.at("m").get<Index>();
    check_m(g.m);
    const auto h = j.at("h_cond").get<std::vector<double>>();
    const auto v = j.at("v_cond").get<std::vector<double>>();
    const auto t = j.at("boundary_temps").get<std::vector<double>>();
    const Index m = g.m;
    if (static_cast<Index>(h.size()) != (m + 2) * (m + 1) ||
        static_cast<Index>(v.size()) != (m + 1) * (m + 2) ||
        static_cast<Index>(t.size()) != 4 * (m + 1))
      throw std::invalid_argument("network json: array sizes inconsistent with m");
    g.h_cond.resize(m + 2, m + 1);
    g.v_cond.resize(m + 1, m + 2);
    std::size_t pos = 0;
    for (Index r = 0; r < m + 2; ++r)
      for (Index c = 0; c < m + 1; ++c) g.h_cond(r, c) = h[pos++];
    pos = 0;
    for (Index r = 0; r < m + 1; ++r)
      for (Index c = 0; c < m + 2; ++c) g.v_cond(r, c) = v[pos++];
    g.boundary_temps =
        Eigen::Map<const Vector>(t.data(), static_cast<Index>(t.size()));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("network json: ") + e.what());
  }
  g.validate();
  return g;
}

}  // namespace gridhss

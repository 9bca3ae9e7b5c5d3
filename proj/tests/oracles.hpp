#pragma once
// Naive reference implementations used to cross-check the library.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "circsq/dyadic.hpp"
#include "circsq/finite_flow.hpp"
#include "circsq/lattice.hpp"
#include "circsq/tiling.hpp"

namespace oracle {

using circsq::Dyadic;
using circsq::LatticeWindow;
using circsq::Point;

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Point add(const Point& a, const Point& b, std::int64_t s = 1) {
  Point r{};
  for (int i = 0; i < circsq::kMaxDim; ++i) r[i] = a[i] + s * b[i];
  return r;
}

// Lower corner of the side-2^n box with phase `offset` holding y.
inline Point box_lo(const Point& y, const Point& offset, int n, int d) {
  const std::int64_t side = std::int64_t{1} << n;
  Point lo{};
  for (int i = 0; i < d; ++i) {
    const std::int64_t o = ((offset[i] % side) + side) % side;
    lo[i] = o + side * floor_div(y[i] - o, side);
  }
  return lo;
}

inline bool in_box(const Point& p, const Point& lo, std::int64_t side, int d) {
  for (int i = 0; i < d; ++i) {
    if (p[i] < lo[i] || p[i] >= lo[i] + side) return false;
  }
  return true;
}

// Start points z of the segments z, z+g, ..., z+2^{n-1}g through y inside y's box.
inline std::vector<Point> segment_starts(const Point& y, const Point& g, const Point& offset, int n, int d) {
  const Point lo = box_lo(y, offset, n, d);
  const std::int64_t side = std::int64_t{1} << n;
  const std::int64_t half = side / 2;
  std::vector<Point> out;
  for (std::int64_t i = 0; i < half; ++i) {
    const Point z = add(y, g, -i);
    if (in_box(z, lo, side, d) && in_box(add(z, g, half), lo, side, d)) out.push_back(z);
  }
  return out;
}

// f values indexed by window index; cells outside the window read as 0.
struct RawField {
  LatticeWindow window;
  std::vector<int> values;

  int at(const Point& p) const { return window.contains(p) ? values[window.index(p)] : 0; }

  std::int64_t sum_box(const Point& lo, std::int64_t side) const {
    std::int64_t total = 0;
    const int d = window.d();
    Point p = lo;
    std::int64_t count = 1;
    for (int i = 0; i < d; ++i) count *= side;
    for (std::int64_t c = 0; c < count; ++c) {
      std::int64_t rem = c;
      for (int i = d - 1; i >= 0; --i) {
        p[i] = lo[i] + rem % side;
        rem /= side;
      }
      total += at(p);
    }
    return total;
  }
};

inline Dyadic phi(const RawField& f, const Point& y, const Point& g, const Point& offset, int n) {
  const int d = f.window.d();
  const auto starts = segment_starts(y, g, offset, n, d);
  if (starts.empty()) return Dyadic(0);
  // the level n-1 cell (phase offset mod 2^{n-1}) of any start
  const Point qlo = box_lo(starts.front(), offset, n - 1, d);
  const std::int64_t s = f.sum_box(qlo, std::int64_t{1} << (n - 1));
  return Dyadic(static_cast<std::int64_t>(starts.size()) * s).scale_pow2(-static_cast<std::int64_t>(n) * d);
}

inline Dyadic psi_chain(const RawField& f, const Point& base, const std::vector<Point>& cosets, const Point& y,
                        const Point& g) {
  const int d = f.window.d();
  Dyadic total;
  for (int i = 1; i < static_cast<int>(cosets.size()); ++i) {
    const Point phase = add(base, cosets[i]);
    const Point yg = add(y, g);
    const Point ng = add(Point{}, g, -1);
    total += phi(f, y, g, phase, i) - phi(f, yg, ng, phase, i);
  }
  (void)d;
  return total;
}

inline Dyadic level_sum(const RawField& f, const Point& y, const Point& g, int n) {
  const int d = f.window.d();
  const std::int64_t side = std::int64_t{1} << n;
  std::int64_t count = 1;
  for (int i = 0; i < d; ++i) count *= side;
  Dyadic total;
  for (std::int64_t c = 0; c < count; ++c) {
    Point o{};
    std::int64_t rem = c;
    for (int i = 0; i < d; ++i) {
      o[i] = rem % side;
      rem /= side;
    }
    total += phi(f, y, g, o, n) - phi(f, add(y, g), add(Point{}, g, -1), o, n);
  }
  return total.scale_pow2(-static_cast<std::int64_t>(n) * d);
}

// ---------------------------------------------------------------- finite graphs

inline std::int64_t cap_out(const circsq::FiniteGraph& g, const circsq::Capacity& cap, const std::vector<bool>& in) {
  std::int64_t c = 0;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edge(e);
    if (in[u] && !in[v]) c += cap.forward[e];
    if (in[v] && !in[u]) c += cap.backward[e];
  }
  return c;
}

// max flow = min over s-t cuts of the outgoing capacity
inline std::int64_t min_cut_value(const circsq::FiniteGraph& g, int s, int t, const circsq::Capacity& cap) {
  const int n = g.vertex_count();
  std::int64_t best = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!(mask >> s & 1u) || (mask >> t & 1u)) continue;
    std::vector<bool> in(n);
    for (int v = 0; v < n; ++v) in[v] = mask >> v & 1u;
    const auto c = cap_out(g, cap, in);
    if (best < 0 || c < best) best = c;
  }
  return best;
}

// An f-flow within capacities exists iff every vertex set F satisfies
// -c(into F) <= sum_F f <= c(out of F).
inline bool cut_condition(const circsq::FiniteGraph& g, const std::vector<std::int64_t>& f,
                          const circsq::Capacity& cap) {
  const int n = g.vertex_count();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<bool> in(n), out(n);
    std::int64_t sum = 0;
    for (int v = 0; v < n; ++v) {
      in[v] = mask >> v & 1u;
      out[v] = !in[v];
      if (in[v]) sum += f[v];
    }
    if (sum > cap_out(g, cap, in)) return false;
    if (-sum > cap_out(g, cap, out)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- lattice regions

inline std::vector<Point> king_neighbours(const LatticeWindow& w, const Point& p) {
  std::vector<Point> out;
  const auto& dirs = circsq::DirectionTable::get(w.d());
  for (int i = 0; i < dirs.count(); ++i) {
    const Point q = add(p, dirs.dir(i));
    if (w.contains(q)) out.push_back(q);
  }
  return out;
}

// Holes of S: complement components (king adjacency) that never reach the
// window's outer layer or the outside of the core.
inline std::set<std::int64_t> fill_holes(const LatticeWindow& w, const std::set<std::int64_t>& S) {
  std::vector<int> seen(static_cast<std::size_t>(w.size()), 0);
  std::set<std::int64_t> out = S;
  for (std::int64_t start = 0; start < w.size(); ++start) {
    if (S.count(start) || seen[start]) continue;
    std::vector<std::int64_t> comp;
    std::deque<std::int64_t> q{start};
    seen[start] = 1;
    bool escapes = false;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      comp.push_back(v);
      const Point p = w.point(v);
      if (circsq::is_frontier(w, p)) escapes = true;
      for (const auto& nb : king_neighbours(w, p)) {
        const auto ni = w.index(nb);
        if (S.count(ni) || seen[ni]) continue;
        seen[ni] = 1;
        q.push_back(ni);
      }
    }
    if (!escapes) out.insert(comp.begin(), comp.end());
  }
  return out;
}

// Edges (as sorted vertex pairs) with exactly one endpoint in F.
inline std::set<std::pair<std::int64_t, std::int64_t>> boundary_pairs(const LatticeWindow& w,
                                                                      const std::set<std::int64_t>& F) {
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  for (auto v : F) {
    for (const auto& nb : king_neighbours(w, w.point(v))) {
      const auto ni = w.index(nb);
      if (!F.count(ni)) out.insert({std::min(v, ni), std::max(v, ni)});
    }
  }
  return out;
}

inline bool adjacent(const LatticeWindow& w, std::int64_t a, std::int64_t b) {
  const Point p = w.point(a), q = w.point(b);
  std::int64_t m = 0;
  for (int i = 0; i < w.d(); ++i) m = std::max<std::int64_t>(m, std::abs(p[i] - q[i]));
  return m == 1;
}

// Random connected region grown by king steps from `seed`, kept at least
// `pad` away from the window edge.
inline std::set<std::int64_t> random_region(const LatticeWindow& w, std::mt19937_64& rng, std::size_t size,
                                            std::int64_t pad) {
  const int d = w.d();
  Point c{};
  for (int i = 0; i < d; ++i) c[i] = w.side() / 2;
  std::set<std::int64_t> S{w.index(c)};
  std::vector<std::int64_t> order{w.index(c)};
  const auto& dirs = circsq::DirectionTable::get(d);
  int guard = 0;
  while (S.size() < size && guard++ < 100000) {
    const auto from = order[rng() % order.size()];
    const Point q = add(w.point(from), dirs.dir(static_cast<int>(rng() % dirs.count())));
    bool ok = true;
    for (int i = 0; i < d; ++i) ok = ok && q[i] >= pad && q[i] < w.side() - pad;
    if (!ok) continue;
    const auto qi = w.index(q);
    if (S.insert(qi).second) order.push_back(qi);
  }
  return S;
}

}  // namespace oracle

#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "circsq/error.hpp"
#include "circsq/flow_construct.hpp"
#include "circsq/integralize.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"

using namespace circsq;

namespace {

Region to_region(const std::set<std::int64_t>& s) { return Region(std::vector<std::int64_t>(s.begin(), s.end())); }

std::pair<std::int64_t, std::int64_t> ends(const LatticeWindow& w, const EdgeKey& e) {
  const auto& dirs = DirectionTable::get(w.d());
  return {e.lower, w.index(oracle::add(w.point(e.lower), dirs.dir(dirs.positive_dir(e.slot))))};
}

// H built directly: boundary edges, joined when they share an endpoint and
// their far ends are adjacent.
std::set<std::pair<std::pair<std::int64_t, std::int64_t>, std::pair<std::int64_t, std::int64_t>>> naive_H(
    const LatticeWindow& w, const std::set<std::int64_t>& F) {
  const auto bd = oracle::boundary_pairs(w, F);
  std::set<std::pair<std::pair<std::int64_t, std::int64_t>, std::pair<std::int64_t, std::int64_t>>> out;
  for (auto a = bd.begin(); a != bd.end(); ++a) {
    for (auto b = std::next(a); b != bd.end(); ++b) {
      std::int64_t shared = -1, x = -1, z = -1;
      if (a->first == b->first) shared = a->first, x = a->second, z = b->second;
      else if (a->first == b->second) shared = a->first, x = a->second, z = b->first;
      else if (a->second == b->first) shared = a->second, x = a->first, z = b->second;
      else if (a->second == b->second) shared = a->second, x = a->first, z = b->first;
      if (shared < 0 || !oracle::adjacent(w, x, z)) continue;
      out.insert({*a, *b});
    }
  }
  return out;
}

// random dyadic circulations around lattice triangles touching F
void add_circulations(EdgeField<Dyadic>& phi, const LatticeWindow& w, const std::set<std::int64_t>& F,
                      std::mt19937_64& rng, int count) {
  const auto& dirs = DirectionTable::get(w.d());
  const std::vector<std::int64_t> verts(F.begin(), F.end());
  for (int c = 0; c < count; ++c) {
    const Point x = w.point(verts[rng() % verts.size()]);
    const int a = static_cast<int>(rng() % dirs.count());
    const int b = static_cast<int>(rng() % dirs.count());
    const Point y = oracle::add(x, dirs.dir(a));
    const Point z = oracle::add(x, dirs.dir(b));
    if (a == b || !oracle::adjacent(w, w.index(y), w.index(z))) continue;
    const Dyadic v = fuzz::random_dyadic(rng, 5, 20);
    phi.add_to(x, a, v);
    phi.add_to(y, dirs.find(oracle::add(z, y, -1)), v);
    phi.add_to(z, dirs.negation(b), v);
  }
}

std::map<std::int64_t, Dyadic> divergences(const EdgeField<Dyadic>& phi, const LatticeWindow& w, std::int64_t pad) {
  std::map<std::int64_t, Dyadic> out;
  for (std::int64_t v = 0; v < w.size(); ++v) {
    const Point p = w.point(v);
    bool inner = true;
    for (int i = 0; i < w.d(); ++i) inner = inner && p[i] >= pad && p[i] < w.side() - pad;
    if (inner) out[v] = divergence(phi, p);
  }
  return out;
}

}  // namespace

TEST_CASE("triangle counts through an edge") {
  CHECK(triangles_through_edge(2, 1) == 4);
  CHECK(triangles_through_edge(2, 0) == 2);
  // against a direct count
  for (int d = 2; d <= 4; ++d) {
    const auto& dirs = DirectionTable::get(d);
    for (int i = 0; i < dirs.count(); ++i) {
      const Point& g = dirs.dir(i);
      int zeros = 0;
      for (int j = 0; j < d; ++j) zeros += g[j] == 0;
      int count = 0;
      for (int k = 0; k < dirs.count(); ++k) {
        const Point& h = dirs.dir(k);
        if (k == i) continue;
        std::int64_t m = 0;
        for (int j = 0; j < d; ++j) m = std::max<std::int64_t>(m, std::abs(h[j] - g[j]));
        count += m == 1;
      }
      CHECK(triangles_through_edge(d, zeros) == count);
    }
  }
}

TEST_CASE("boundary cycle graph") {
  const LatticeWindow w(2, 8, 1);
  std::set<std::int64_t> block;
  for (std::int64_t a = 3; a < 5; ++a)
    for (std::int64_t b = 3; b < 5; ++b) block.insert(w.index(make_point({a, b})));
  const auto H = build_boundary_cycle_graph(w, to_region(block));
  CHECK(H.vertices.size() == oracle::boundary_pairs(w, block).size());
  for (const auto& adj : H.adjacency) CHECK(adj.size() % 2 == 0);

  std::size_t edges = 0;
  std::set<std::pair<std::pair<std::int64_t, std::int64_t>, std::pair<std::int64_t, std::int64_t>>> got;
  for (std::size_t u = 0; u < H.vertices.size(); ++u) {
    for (int v : H.adjacency[u]) {
      if (static_cast<int>(u) < v) {
        ++edges;
        got.insert(std::minmax(ends(w, H.vertices[u]), ends(w, H.vertices[v])));
      }
    }
  }
  CHECK(static_cast<std::int64_t>(edges) == H.edge_count);
  CHECK(got == naive_H(w, block));

  SUBCASE("regions with holes are rejected") {
    std::set<std::int64_t> ring;
    for (std::int64_t a = 2; a < 5; ++a)
      for (std::int64_t b = 2; b < 5; ++b)
        if (a != 3 || b != 3) ring.insert(w.index(make_point({a, b})));
    CHECK_THROWS(build_boundary_cycle_graph(w, to_region(ring)));
  }
}

TEST_CASE("Euler walks") {
  SUBCASE("triangle") {
    const LatticeWindow w(2, 5, 0);
    const auto& dirs = DirectionTable::get(2);
    const auto x = w.index(make_point({1, 1}));
    BoundaryCycleGraph H;
    // edges {x, x+(0,1)}, {x, x+(1,1)}, {x+(0,1), x+(1,1)}
    H.vertices = {EdgeKey{x, dirs.slot(dirs.find(make_point({0, 1})))}, EdgeKey{x, dirs.slot(dirs.find(make_point({1, 1})))},
                  EdgeKey{w.index(make_point({1, 2})), dirs.slot(dirs.find(make_point({1, 0})))}};
    std::sort(H.vertices.begin(), H.vertices.end());
    H.adjacency = {{1, 2}, {0, 2}, {0, 1}};
    H.edge_count = 3;
    const auto walk = euler_cycle(w, H);
    CHECK(walk.sequence.size() == 3);
    CHECK(std::set<int>(walk.sequence.begin(), walk.sequence.end()).size() == 3);
  }
  SUBCASE("odd degree is rejected") {
    const LatticeWindow w(2, 5, 0);
    BoundaryCycleGraph H;
    H.vertices = {EdgeKey{0, 0}, EdgeKey{0, 1}};
    H.adjacency = {{1}, {0}};
    H.edge_count = 1;
    CHECK_THROWS_AS(euler_cycle(w, H), InvalidArgument);
  }
  SUBCASE("random regions") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 40; ++t) {
      const int d = 2 + t % 2;
      const LatticeWindow w(d, d == 2 ? 16 : 10, 1);
      const auto F = oracle::fill_holes(w, oracle::random_region(w, rng, 1 + rng() % 40, 3));
      const auto H = build_boundary_cycle_graph(w, to_region(F));
      const auto walk = euler_cycle(w, H);
      REQUIRE(static_cast<std::int64_t>(walk.sequence.size()) == H.edge_count);
      std::set<std::pair<int, int>> seen;
      const std::size_t m = walk.sequence.size();
      for (std::size_t i = 0; i < m; ++i) {
        const int a = walk.sequence[i], b = walk.sequence[(i + 1) % m];
        const auto& adj = H.adjacency[a];
        CHECK(std::binary_search(adj.begin(), adj.end(), b));
        CHECK(seen.insert(std::minmax(a, b)).second);
        const auto& tri = walk.triangles[i];
        // e_i = {x, y}, e_{i+1} = {y, z}
        CHECK(std::pair<std::int64_t, std::int64_t>(std::minmax(tri.x, tri.y)) == ends(w, H.vertices[a]));
        CHECK(std::pair<std::int64_t, std::int64_t>(std::minmax(tri.y, tri.z)) == ends(w, H.vertices[b]));
      }
    }
  }
}

TEST_CASE("adjusting a region makes its boundary integral") {
  SUBCASE("2x2 block with half units flowing out") {
    const LatticeWindow w(2, 8, 0);
    EdgeField<Dyadic> phi(w);
    std::set<std::int64_t> F;
    for (std::int64_t a = 3; a < 5; ++a)
      for (std::int64_t b = 3; b < 5; ++b) F.insert(w.index(make_point({a, b})));
    for (const auto& [u, v] : oracle::boundary_pairs(w, F)) {
      const auto [in, out] = F.count(u) ? std::pair{u, v} : std::pair{v, u};
      const auto& dirs = DirectionTable::get(2);
      phi.add_to(w.point(in), dirs.find(oracle::add(w.point(out), w.point(in), -1)), Dyadic(1, 1));
    }
    const auto before = divergences(phi, w, 1);
    adjust_on_region(phi, w, to_region(F));
    CHECK(divergences(phi, w, 1) == before);
    for (const auto& [u, v] : oracle::boundary_pairs(w, F)) {
      const auto& dirs = DirectionTable::get(2);
      CHECK(phi.get(w.point(u), dirs.find(oracle::add(w.point(v), w.point(u), -1))).is_integer());
    }
  }
  SUBCASE("already integral is untouched") {
    const LatticeWindow w(2, 8, 0);
    EdgeField<Dyadic> phi(w);
    const auto& dirs = DirectionTable::get(2);
    phi.set(make_point({3, 3}), dirs.find(make_point({1, 0})), Dyadic(2));
    const auto copy = phi;
    adjust_on_region(phi, w, Region({w.index(make_point({3, 3}))}));
    phi.for_each_edge([&](const Point& p, int s, const Dyadic& v) { CHECK(v == copy.at(p, s)); });
  }
  SUBCASE("fuzz regions in two and three dimensions") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 60; ++t) {
      const int d = 2 + t % 2;
      const LatticeWindow w(d, d == 2 ? 18 : 11, 0);
      const auto F = oracle::fill_holes(w, oracle::random_region(w, rng, 1 + rng() % 50, 3));
      EdgeField<Dyadic> phi(w);
      add_circulations(phi, w, F, rng, 60);
      const auto copy = phi;
      const auto before = divergences(phi, w, 1);
      adjust_on_region(phi, w, to_region(F));
      CHECK(divergences(phi, w, 1) == before);
      // changes stay on edges of the second boundary and are bounded by the degree
      const auto& dirs = DirectionTable::get(d);
      const auto second = boundary_n(w, to_region(F), 2);
      const std::set<EdgeKey> allowed(second.begin(), second.end());
      const Dyadic bound(static_cast<std::int64_t>(std::pow(3, d)) - 1);
      phi.for_each_edge([&](const Point& p, int s, const Dyadic& v) {
        const Dyadic delta = (v - copy.at(p, s)).abs();
        if (!delta.is_zero()) CHECK(allowed.count(EdgeKey{w.index(p), s}));
        CHECK(delta <= bound);
      });
      for (const auto& [u, v] : oracle::boundary_pairs(w, F)) {
        CHECK(phi.get(w.point(u), dirs.find(oracle::add(w.point(v), w.point(u), -1))).is_integer());
      }
    }
  }
}

TEST_CASE("working graph layout") {
  const LatticeWindow w(2, 6, 1);
  const WorkingGraph wg(w);
  CHECK(wg.core_vertex_count() == 16);
  // layer = ring of 20 around the 4x4 core
  CHECK(wg.graph().vertex_count() == 16 + 20 + 1);
  CHECK(wg.sink() == 36);
  for (int v = 0; v < wg.core_vertex_count(); ++v) {
    CHECK(w.in_core(wg.window_index(v)));
    if (v > 0) CHECK(wg.window_index(v - 1) < wg.window_index(v));
    CHECK(wg.vertex_of(wg.window_index(v)) == v);
  }
  std::vector<int> values(36, 0);
  values[w.index(make_point({2, 2}))] = 1;
  values[w.index(make_point({1, 3}))] = -1;
  values[w.index(make_point({3, 4}))] = 1;
  const auto f = wg.demand(field_from_values(w, values));
  std::int64_t total = 0;
  for (auto x : f) total += x;
  CHECK(total == 0);
  CHECK(f[wg.sink()] == -1);
}

TEST_CASE("repairing a truncated flow") {
  std::mt19937_64 rng(43);
  const LatticeWindow w(2, 20, 4);
  std::vector<int> values(static_cast<std::size_t>(w.size()));
  for (auto& v : values) v = static_cast<int>(rng() % 3) - 1;
  const auto field = field_from_values(w, values);
  const WorkingGraph wg(w);
  const BoxPrefixSums sums(field);
  Point lo{}, hi{};
  wg.storage_box(lo, hi);
  const auto psi = truncated_psi(sums, 2, lo, hi);
  const auto repaired = repair_flow(wg, psi, field, std::nullopt);
  for (std::int64_t v = 0; v < w.size(); ++v) {
    if (w.in_core(v)) CHECK(divergence(repaired, w.point(v)) == Dyadic(field.value(v)));
  }
  CHECK_THROWS_AS(repair_flow(wg, psi, field, std::int64_t{0}), InfeasibleError);
}

TEST_CASE("integralizing lattice flows") {
  std::mt19937_64 rng(44);
  const LatticeWindow w(2, 64, 2);
  const WorkingGraph wg(w);
  CHECK(max_cover_levels(w, 3) == 0);
  for (auto mode : {IntegralizeMode::Direct, IntegralizeMode::Cover}) {
    for (int t = 0; t < 3; ++t) {
      const auto inst = fuzz::lattice_instance(wg, rng, 0.3, 3000, 6);
      const auto res = integralize_flow(wg, inst.phi, inst.field, mode, 3, 0);
      const Dyadic bound = mode == IntegralizeMode::Direct ? Dyadic(1) : Dyadic(9);
      Dyadic worst;
      for (std::int64_t v = 0; v < w.size(); ++v) {
        if (!w.in_core(v)) continue;
        const Point p = w.point(v);
        CHECK(divergence(res.flow, p) == inst.field.value(v));
        const auto& dirs = DirectionTable::get(2);
        for (int i = 0; i < dirs.count(); ++i) {
          const Dyadic dev = (Dyadic(res.flow.get(p, i)) - inst.phi.get(p, i)).abs();
          if (dev > worst) worst = dev;
          if (inst.phi.get(p, i).is_integer() && mode == IntegralizeMode::Direct) {
            CHECK(Dyadic(res.flow.get(p, i)) == inst.phi.get(p, i));
          }
        }
      }
      CHECK(worst == res.max_deviation);
      if (mode == IntegralizeMode::Direct) CHECK(worst < bound);
      else CHECK(worst <= bound);
      if (mode == IntegralizeMode::Cover) CHECK(res.regions > 0);
    }
  }
  SUBCASE("integral input is unchanged") {
    const auto inst = fuzz::lattice_instance(wg, rng, 0.3, 0, 0);
    for (auto mode : {IntegralizeMode::Direct, IntegralizeMode::Cover}) {
      const auto res = integralize_flow(wg, inst.phi, inst.field, mode, 3, 0);
      CHECK(res.max_deviation.is_zero());
    }
  }
}

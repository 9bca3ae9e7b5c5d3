#include <doctest.h>

#include <random>
#include <set>

#include "circsq/error.hpp"
#include "circsq/tiling.hpp"
#include "oracles.hpp"

using namespace circsq;

namespace {

std::set<std::pair<std::int64_t, std::int64_t>> as_pairs(const LatticeWindow& w, const std::vector<EdgeKey>& keys) {
  const auto& dirs = DirectionTable::get(w.d());
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  for (const auto& e : keys) {
    const Point q = oracle::add(w.point(e.lower), dirs.dir(dirs.positive_dir(e.slot)));
    out.insert(std::minmax(e.lower, w.index(q)));
  }
  return out;
}

Region to_region(const std::set<std::int64_t>& s) { return Region(std::vector<std::int64_t>(s.begin(), s.end())); }

std::int64_t naive_distance(const LatticeWindow& w, std::int64_t a, std::int64_t b) {
  const Point p = w.point(a), q = w.point(b);
  std::int64_t m = 0;
  for (int i = 0; i < w.d(); ++i) m = std::max<std::int64_t>(m, std::abs(p[i] - q[i]));
  return m;
}

}  // namespace

TEST_CASE("edge boundaries") {
  const LatticeWindow w(2, 7, 1);
  const auto c = w.index(make_point({3, 3}));
  CHECK(boundary(w, Region({c})).size() == 8);
  CHECK(boundary(w, Region()).empty());
  std::vector<std::int64_t> all(static_cast<std::size_t>(w.size()));
  for (std::int64_t i = 0; i < w.size(); ++i) all[i] = i;
  CHECK(boundary(w, Region(all)).empty());

  const LatticeWindow line(1, 9, 1);
  const Region single({line.index(make_point({4}))});
  CHECK(boundary_n(line, single, 1) == boundary(line, single));
  CHECK(boundary_n(line, single, 2).size() == 4);

  std::mt19937_64 rng(31);
  for (int t = 0; t < 40; ++t) {
    const auto S = oracle::random_region(w, rng, 1 + rng() % 12, 0);
    const Region R = to_region(S);
    CHECK(as_pairs(w, boundary(w, R)) == oracle::boundary_pairs(w, S));
    const auto b1 = as_pairs(w, boundary_n(w, R, 1));
    const auto b2 = as_pairs(w, boundary_n(w, R, 2));
    for (const auto& e : b1) CHECK(b2.count(e));
  }
}

TEST_CASE("hole filling") {
  const LatticeWindow w(2, 9, 1);
  std::set<std::int64_t> box, annulus;
  for (std::int64_t a = 3; a < 6; ++a)
    for (std::int64_t b = 3; b < 6; ++b) {
      box.insert(w.index(make_point({a, b})));
      if (a != 4 || b != 4) annulus.insert(w.index(make_point({a, b})));
    }
  CHECK(fill_holes(w, to_region(box)).vertices() == to_region(box).vertices());
  CHECK(fill_holes(w, to_region(annulus)).vertices() == to_region(box).vertices());

  std::mt19937_64 rng(32);
  const LatticeWindow w3(3, 9, 1);
  for (int t = 0; t < 30; ++t) {
    const auto& win = t % 2 ? w3 : w;
    const auto S = oracle::random_region(win, rng, 5 + rng() % 60, 1);
    const auto expect = oracle::fill_holes(win, S);
    CHECK(fill_holes(win, to_region(S)).vertices() == to_region(expect).vertices());
  }
}

TEST_CASE("connectivity, diameter and distance") {
  const LatticeWindow w(2, 10, 0);
  const Region diag({w.index(make_point({1, 1})), w.index(make_point({2, 2}))});
  CHECK(is_connected(w, diag));
  CHECK(diameter(w, diag) == 1);
  const Region apart({w.index(make_point({1, 1})), w.index(make_point({3, 1}))});
  CHECK_FALSE(is_connected(w, apart));
  const Region a({w.index(make_point({0, 0}))}), b({w.index(make_point({4, 2}))});
  CHECK(within_distance(w, a, b, 4));
  CHECK_FALSE(within_distance(w, a, b, 3));
}

TEST_CASE("greedy nets") {
  const LatticeWindow line(1, 5, 0);
  const Region all({0, 1, 2, 3, 4});
  CHECK(greedy_net(line, 1, all).points == std::vector<std::int64_t>{0, 2, 4});
  CHECK(greedy_net(line, 10, all).points == std::vector<std::int64_t>{0});

  const LatticeWindow w(2, 30, 2);
  const Region core = core_region(w);
  for (std::int64_t r : {1, 3, 5}) {
    const auto net = greedy_net(w, r, core);
    for (std::size_t i = 0; i < net.points.size(); ++i)
      for (std::size_t j = i + 1; j < net.points.size(); ++j) CHECK(naive_distance(w, net.points[i], net.points[j]) > r);
    for (auto v : core.vertices()) {
      bool close = false;
      for (auto p : net.points) close = close || naive_distance(w, v, p) <= r;
      CHECK(close);
    }
  }
}

TEST_CASE("balls") {
  const LatticeWindow w(2, 9, 0);
  const auto c = w.index(make_point({4, 4}));
  CHECK(ball(w, c, 0).vertices() == std::vector<std::int64_t>{c});
  CHECK(ball(w, c, 1).size() == 9);
  CHECK(ball(w, c, 2).size() == 25);
  const Region s({w.index(make_point({1, 1})), w.index(make_point({6, 7}))});
  const auto b1 = ball(w, s, 1), b2 = ball(w, s, 2);
  for (auto v : b1.vertices()) CHECK(b2.contains(v));
  for (std::int64_t v = 0; v < w.size(); ++v) {
    const bool near = naive_distance(w, v, s.vertices()[0]) <= 2 || naive_distance(w, v, s.vertices()[1]) <= 2;
    CHECK(b2.contains(v) == near);
  }
}

TEST_CASE("enlarging layers") {
  const LatticeWindow w(2, 80, 0);
  const std::int64_t r = 2;
  const std::vector<Region> Y{ball(w, w.index(make_point({20, 20})), 3)};
  CHECK(enlarge(w, Y, {}, r)[0].vertices() == Y[0].vertices());
  const std::vector<Region> Z{Region({w.index(make_point({20, 25}))})};
  const auto out = enlarge(w, Y, Z, r);
  REQUIRE(out.size() == 1);
  CHECK(is_connected(w, out[0]));
  const Region grown = ball(w, Z[0], r);
  for (auto v : grown.vertices()) CHECK(out[0].contains(v));
  // far elements of Z are left alone
  const std::vector<Region> far{Region({w.index(make_point({60, 60}))})};
  CHECK(enlarge(w, Y, far, r)[0].vertices() == Y[0].vertices());
}

TEST_CASE("boundary-disjoint cover, single level") {
  const LatticeWindow w(2, 200, 2);
  const auto cover = boundary_disjoint_cover(w, 1, 0);
  REQUIRE_FALSE(cover.regions.empty());
  const std::int64_t r0 = cover.radii[0];
  CHECK(r0 == 12);
  for (std::size_t a = 0; a < cover.regions.size(); ++a)
    for (std::size_t b = a + 1; b < cover.regions.size(); ++b)
      CHECK_FALSE(within_distance(w, cover.regions[a].region, cover.regions[b].region, 3 * r0));
  const auto report = check_cover(w, cover);
  CHECK(report.ok());
}

TEST_CASE("rectangular tilings") {
  CHECK(split_side(7, 3) == std::vector<std::int64_t>{3, 4});
  CHECK(split_side(12, 4) == std::vector<std::int64_t>{4, 4, 4});
  bool irregular = false;
  split_side(11, 5, &irregular);
  CHECK_FALSE(irregular);
  split_side(14, 5, &irregular);
  CHECK(irregular);

  for (std::int64_t K : {1, 2, 3, 5}) {
    const LatticeWindow w(2, 17, 2);
    const auto t = rect_tiling(w, K);
    std::vector<int> hits(static_cast<std::size_t>(w.size()), 0);
    for (std::size_t i = 0; i < t.tiles.size(); ++i) {
      for (auto v : t.tiles[i].vertices()) {
        ++hits[v];
        CHECK(t.tile_of[v] == static_cast<int>(i));
      }
      if (i > 0) CHECK(t.tiles[i - 1].vertices().front() < t.tiles[i].vertices().front());
    }
    for (std::int64_t v = 0; v < w.size(); ++v) CHECK(hits[v] == (w.in_core(v) ? 1 : 0));
  }
}

TEST_CASE("Voronoi tilings") {
  const LatticeWindow line(1, 10, 1);
  Net one;
  one.points = {line.index(make_point({3}))};
  one.r = 2;
  const auto single = voronoi_tiling(line, one);
  REQUIRE(single.tiles.size() == 1);
  CHECK(single.tiles[0].size() == 8);

  Net two;
  two.points = {line.index(make_point({2})), line.index(make_point({6}))};
  two.r = 2;
  const auto halves = voronoi_tiling(line, two);
  REQUIRE(halves.tiles.size() == 2);
  // 4 is equidistant from both seeds and goes to the lesser one
  CHECK(halves.tile_of[line.index(make_point({4}))] == 0);
  CHECK(halves.tile_of[line.index(make_point({5}))] == 1);

  std::mt19937_64 rng(33);
  const LatticeWindow w(2, 40, 2);
  const auto net = greedy_net(w, 4, core_region(w));
  const auto t = voronoi_tiling(w, net);
  for (std::int64_t v = 0; v < w.size(); ++v) {
    if (!w.in_core(v)) {
      CHECK(t.tile_of[v] == -1);
      continue;
    }
    // lexicographically least nearest seed
    std::int64_t best = -1, best_d = 0;
    for (auto s : net.points) {
      const auto dd = naive_distance(w, v, s);
      if (best < 0 || dd < best_d || (dd == best_d && s < best)) {
        best = s;
        best_d = dd;
      }
    }
    CHECK(t.tiles[t.tile_of[v]].contains(best));
  }
  std::size_t worst = 0;
  for (const auto& cell : t.tiles) worst = std::max(worst, boundary(w, cell).size());
  // cells have radius at most r, so boundaries stay O(r^{d-1})
  CHECK(worst <= 8 * (2 * 4 + 2) * 3);
  (void)rng;
}

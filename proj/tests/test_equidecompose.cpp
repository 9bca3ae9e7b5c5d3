#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "circsq/equidecompose.hpp"
#include "circsq/error.hpp"
#include "circsq/integralize.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"

using namespace circsq;

namespace {

IndicatorField line_field(const LatticeWindow& w, const std::map<std::int64_t, int>& values) {
  std::vector<int> v(static_cast<std::size_t>(w.size()), 0);
  for (auto [x, s] : values) v[w.index(make_point({x}))] = s;
  return field_from_values(w, v);
}

struct Fixture {
  LatticeWindow window;
  IndicatorField field;
  EdgeField<std::int64_t> flow;
};

Fixture random_fixture(std::mt19937_64& rng, std::int64_t L) {
  const LatticeWindow w(2, L, 2);
  const WorkingGraph wg(w);
  auto inst = fuzz::lattice_instance(wg, rng, 0.4, 400, 4);
  auto res = integralize_flow(wg, inst.phi, inst.field, IntegralizeMode::Direct);
  return {w, std::move(inst.field), std::move(res.flow)};
}

}  // namespace

TEST_CASE("integral flow bound") {
  CHECK(integral_flow_bound(0.0, 2) == 9);
  CHECK(integral_flow_bound(1.2, 3) == 29);
  CHECK(integral_flow_bound(2.0, 1) == 5);
  CHECK_THROWS_AS(integral_flow_bound(-1.0, 2), InvalidArgument);
}

TEST_CASE("certified tile sides") {
  SUBCASE("striped field") {
    // A on even rows, B on odd rows
    const LatticeWindow w(2, 132, 2);
    std::vector<int> v(static_cast<std::size_t>(w.size()), 0);
    for (std::int64_t i = 0; i < w.size(); ++i) {
      const Point p = w.point(i);
      v[i] = p[0] % 2 ? -1 : 1;
    }
    const auto f = field_from_values(w, v);
    const std::int64_t c = 1;
    const auto K = certified_K(w, f, c);
    REQUIRE(K.has_value());
    // scan oracle: every tile at K passes, some tile at K-1 fails
    auto passes = [&](std::int64_t k) {
      const auto t = rect_tiling(w, k);
      for (const auto& tile : t.tiles) {
        std::int64_t a = 0, b = 0;
        for (auto idx : tile.vertices()) {
          a += f.in_A(idx);
          b += f.in_B(idx);
        }
        if (c * static_cast<std::int64_t>(oracle::boundary_pairs(w, std::set<std::int64_t>(tile.vertices().begin(),
                                                                                            tile.vertices().end()))
                                              .size()) >
            std::min(a, b))
          return false;
      }
      return true;
    };
    CHECK(passes(*K));
    if (*K > 1) CHECK_FALSE(passes(*K - 1));
    CHECK(select_K(w, f, c) == *K);
  }
  SUBCASE("A missing somewhere") {
    const LatticeWindow w(1, 40, 2);
    std::map<std::int64_t, int> vals;
    for (std::int64_t x = 2; x < 20; ++x) vals[x] = x % 2 ? 1 : -1;
    const auto f = line_field(w, vals);
    CHECK_FALSE(certified_K(w, f, 1).has_value());
    CHECK_THROWS_AS(select_K(w, f, 1), InvalidArgument);
  }
}

TEST_CASE("tile flows and matchings on a line") {
  const LatticeWindow w(1, 10, 1);
  const auto tiling = rect_tiling(w, 4);  // [1,5) and [5,9)
  REQUIRE(tiling.tiles.size() == 2);
  const auto& dirs = DirectionTable::get(1);
  const int plus = dirs.find(make_point({1}));

  SUBCASE("no flow across tiles") {
    const auto f = line_field(w, {{2, 1}, {3, -1}, {6, -1}, {7, 1}});
    EdgeField<std::int64_t> psi(w);
    psi.set(make_point({2}), plus, 1);
    psi.set(make_point({7}), dirs.negation(plus), 1);
    const auto tf = tile_flow(psi, tiling, f);
    CHECK(tf.get(0, 1) == 0);
    CHECK(tf.get(1, 0) == 0);
    const auto m = build_matching(tf, tiling, f);
    CHECK(m.pairs == std::vector<std::pair<std::int64_t, std::int64_t>>{{2, 3}, {7, 6}});
    const auto pm = extract_pieces(w, m, 4, gamma_bound(w, tiling));
    for (const auto& as : pm.assignments) CHECK(linf_norm(as.gamma, 1) <= 4);
  }
  SUBCASE("one unit across the interface") {
    const auto f = line_field(w, {{4, 1}, {5, -1}});
    EdgeField<std::int64_t> psi(w);
    psi.set(make_point({4}), plus, 1);
    const auto tf = tile_flow(psi, tiling, f);
    CHECK(tf.get(0, 1) == 1);
    CHECK(tf.get(1, 0) == -1);
    const auto m = build_matching(tf, tiling, f);
    CHECK(m.pairs == std::vector<std::pair<std::int64_t, std::int64_t>>{{4, 5}});
    CHECK(m.unmatched_A.empty());
    CHECK(m.unmatched_B.empty());
  }
  SUBCASE("conservation failure is detected") {
    const auto f = line_field(w, {{4, 1}, {5, -1}});
    EdgeField<std::int64_t> psi(w);
    CHECK_THROWS_AS(tile_flow(psi, tiling, f), InvariantViolation);
  }
  SUBCASE("zero flow on balanced tiles") {
    const auto f = line_field(w, {{1, 1}, {3, -1}, {5, 0}});
    EdgeField<std::int64_t> psi(w);
    psi.set(make_point({1}), plus, 1);
    psi.set(make_point({2}), plus, 1);
    const auto tf = tile_flow(psi, tiling, f);
    for (const auto& [key, v] : tf.transfer) CHECK(v == 0);
    CHECK(tf.count_A[0] == tf.count_B[0]);
  }
}

TEST_CASE("tile flow recount and matching fuzz") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 6; ++t) {
    auto fx = random_fixture(rng, 30);
    const auto& w = fx.window;
    for (std::int64_t K : {2, 3, 5}) {
      const auto tiling = rect_tiling(w, K);
      const auto tf = tile_flow(fx.flow, tiling, fx.field);
      // recount every inter-tile transfer from the raw edges
      std::map<std::pair<int, int>, std::int64_t> naive;
      const auto& dirs = DirectionTable::get(2);
      for (std::int64_t v = 0; v < w.size(); ++v) {
        if (!w.in_core(v)) continue;
        for (int i = 0; i < dirs.count(); ++i) {
          const Point q = oracle::add(w.point(v), dirs.dir(i));
          if (!w.in_core(q)) continue;
          const int R = tiling.tile_of[v], S = tiling.tile_of[w.index(q)];
          if (R != S) naive[{R, S}] += fx.flow.get(w.point(v), i);
        }
      }
      for (const auto& [key, v] : naive) CHECK(tf.get(key.first, key.second) == v);
      for (const auto& [key, v] : tf.transfer) CHECK(tf.get(key.second, key.first) == -v);
      for (std::size_t R = 0; R < tf.tile_count(); ++R) {
        if (!tf.interior[R]) continue;
        std::int64_t out = 0;
        for (int S : tf.neighbours[R]) out += tf.get(static_cast<int>(R), S);
        CHECK(out == tf.count_A[R] - tf.count_B[R]);
      }

      const auto m = build_matching(tf, tiling, fx.field);
      std::set<std::int64_t> srcs, dsts;
      for (const auto& [a, b] : m.pairs) {
        CHECK(fx.field.in_A(a));
        CHECK(fx.field.in_B(b));
        CHECK(srcs.insert(a).second);
        CHECK(dsts.insert(b).second);
      }
      for (auto a : m.unmatched_A) CHECK_FALSE(srcs.count(a));
      for (auto b : m.unmatched_B) CHECK_FALSE(dsts.count(b));
      std::size_t core_A = 0, core_B = 0;
      for (std::int64_t v = 0; v < w.size(); ++v) {
        core_A += w.in_core(v) && fx.field.in_A(v);
        core_B += w.in_core(v) && fx.field.in_B(v);
      }
      CHECK(srcs.size() + m.unmatched_A.size() == core_A);
      CHECK(dsts.size() + m.unmatched_B.size() == core_B);
      // every point of a used tile is matched
      for (std::size_t R = 0; R < tiling.tiles.size(); ++R) {
        if (!m.used[R]) continue;
        for (auto v : tiling.tiles[R].vertices()) {
          if (fx.field.in_A(v)) CHECK(srcs.count(v));
          if (fx.field.in_B(v)) CHECK(dsts.count(v));
        }
      }
      const auto pm = extract_pieces(w, m, K, gamma_bound(w, tiling));
      const auto rep = verify_equidecomposition(pm, fx.field, w.side());
      CHECK(rep.map_ok());
      CHECK(rep.matched == static_cast<std::int64_t>(m.pairs.size()));
    }
  }
}

TEST_CASE("piece extraction") {
  const LatticeWindow w(3, 12, 2);
  CHECK(gamma_bound(w, rect_tiling(w, 1)) == 6);
  Matching empty;
  const auto pm = extract_pieces(w, empty, 1, 6);
  CHECK(pm.assignments.empty());
  CHECK(pm.gammas.empty());

  Matching m;
  m.pairs = {{w.index(make_point({3, 3, 3})), w.index(make_point({4, 3, 3}))},
             {w.index(make_point({5, 5, 5})), w.index(make_point({6, 5, 5}))},
             {w.index(make_point({7, 7, 7})), w.index(make_point({7, 6, 7}))}};
  const auto pm2 = extract_pieces(w, m, 1, 6);
  REQUIRE(pm2.gammas.size() == 2);
  CHECK(pm2.assignments[0].piece == pm2.assignments[1].piece);
  CHECK(pm2.gammas[pm2.assignments[2].piece] == make_point({0, -1, 0}));

  Matching far;
  far.pairs = {{w.index(make_point({2, 2, 2})), w.index(make_point({9, 2, 2}))}};
  CHECK_THROWS_AS(extract_pieces(w, far, 1, 6), InvariantViolation);
}

TEST_CASE("verification catches corrupted maps") {
  const LatticeWindow w(1, 12, 1);
  const auto f = line_field(w, {{2, 1}, {3, -1}, {5, 1}, {6, -1}});
  Matching m;
  m.pairs = {{w.index(make_point({2})), w.index(make_point({3}))}, {w.index(make_point({5})), w.index(make_point({6}))}};
  const auto pm = extract_pieces(w, m, 2, 8);
  CHECK(verify_equidecomposition(pm, f, 0).ok());

  SUBCASE("gamma out of bound") {
    auto bad = pm;
    bad.bound = 1;
    const auto r = verify_equidecomposition(bad, f, 0);
    CHECK_FALSE(r.bound_ok);
    CHECK_FALSE(r.ok());
  }
  SUBCASE("duplicated target") {
    auto bad = pm;
    bad.assignments[1].gamma = make_point({-2});  // 5 -> 3
    bad.gammas = {make_point({-2}), make_point({1})};
    bad.assignments[0].piece = 1;
    bad.assignments[1].piece = 0;
    const auto r = verify_equidecomposition(bad, f, 0);
    CHECK_FALSE(r.injective);
    CHECK(r.pieces_consistent);
  }
  SUBCASE("image outside B") {
    auto bad = pm;
    bad.assignments[0].gamma = make_point({2});
    bad.gammas = {make_point({1}), make_point({2})};
    bad.assignments[0].piece = 1;
    bad.assignments[1].piece = 0;
    CHECK_FALSE(verify_equidecomposition(bad, f, 0).images_in_B);
  }
  SUBCASE("piece id mismatch") {
    auto bad = pm;
    bad.assignments[0].piece = 7;
    CHECK_FALSE(verify_equidecomposition(bad, f, 0).pieces_consistent);
  }
  SUBCASE("unmatched deep points break locality") {
    Matching one;
    one.pairs = {m.pairs[0]};
    const auto partial = extract_pieces(w, one, 2, 8);
    CHECK(verify_equidecomposition(partial, f, 0).map_ok());
    CHECK_FALSE(verify_equidecomposition(partial, f, 0).locality_ok);
    CHECK(verify_equidecomposition(partial, f, 6).locality_ok);
  }
}

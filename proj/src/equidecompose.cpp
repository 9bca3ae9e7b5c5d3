#include "circsq/equidecompose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "circsq/error.hpp"

namespace circsq {
namespace {

Point plus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

// 1 + graph distance from p to the nearest vertex outside the core
std::int64_t depth(const LatticeWindow& w, const Point& p) {
  std::int64_t best = w.side();
  for (int i = 0; i < w.d(); ++i) {
    best = std::min(best, p[i] - w.core_lo() + 1);
    best = std::min(best, w.core_hi() - p[i]);
  }
  return best;
}

}  // namespace

std::int64_t integral_flow_bound(double c, int d) {
  if (!(c >= 0) || !std::isfinite(c)) throw InvalidArgument("flow bound must be finite and non-negative");
  std::int64_t r = static_cast<std::int64_t>(std::ceil(c));
  std::int64_t p = 1;
  for (int i = 0; i < d; ++i) p *= 3;
  return r + p;
}

std::optional<std::int64_t> certified_K(const LatticeWindow& window, const IndicatorField& field,
                                        std::int64_t c_int) {
  for (std::int64_t K = 1; K <= window.core_side() / 4; ++K) {
    const Tiling tiling = rect_tiling(window, K);
    bool ok = true;
    for (const auto& tile : tiling.tiles) {
      std::int64_t a = 0, b = 0;
      for (auto idx : tile.vertices()) {
        a += field.in_A(idx);
        b += field.in_B(idx);
      }
      const auto bd = static_cast<std::int64_t>(boundary(window, tile).size());
      if (c_int * bd > std::min(a, b)) {
        ok = false;
        break;
      }
    }
    if (ok) return K;
  }
  return std::nullopt;
}

std::int64_t select_K(const LatticeWindow& window, const IndicatorField& field, std::int64_t c_int) {
  auto K = certified_K(window, field, c_int);
  if (!K) {
    throw InvalidArgument("no tile side up to " + std::to_string(window.core_side() / 4) +
                          " satisfies the flow-bound condition with c = " + std::to_string(c_int));
  }
  return *K;
}

std::int64_t TileFlow::get(int R, int S) const {
  auto it = transfer.find({R, S});
  return it == transfer.end() ? 0 : it->second;
}

TileFlow tile_flow(const EdgeField<std::int64_t>& psi, const Tiling& tiling, const IndicatorField& field) {
  const auto& window = field.window();
  const auto& dirs = DirectionTable::get(window.d());
  const std::size_t T = tiling.tiles.size();
  TileFlow tf;
  tf.neighbours.resize(T);
  tf.frontier_flux.assign(T, 0);
  tf.interior.assign(T, true);
  tf.count_A.assign(T, 0);
  tf.count_B.assign(T, 0);
  for (std::size_t R = 0; R < T; ++R) {
    for (auto idx : tiling.tiles[R].vertices()) {
      const Point p = window.point(idx);
      tf.count_A[R] += field.in_A(idx);
      tf.count_B[R] += field.in_B(idx);
      for (int i = 0; i < dirs.count(); ++i) {
        const Point q = plus(p, dirs.dir(i));
        const std::int64_t value = psi.get(p, i);
        if (!window.in_core(q)) {
          tf.interior[R] = false;
          tf.frontier_flux[R] += value;
          continue;
        }
        const int S = tiling.tile_of[window.index(q)];
        if (S == static_cast<int>(R)) continue;
        tf.transfer[{static_cast<int>(R), S}] += value;
        tf.neighbours[R].push_back(S);
      }
    }
    auto& nb = tf.neighbours[R];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  for (std::size_t R = 0; R < T; ++R) {
    std::int64_t out = tf.frontier_flux[R];
    for (int S : tf.neighbours[R]) out += tf.get(static_cast<int>(R), S);
    if (out != tf.count_A[R] - tf.count_B[R]) {
      throw InvariantViolation("tile " + std::to_string(R) + " violates flow conservation");
    }
  }
  return tf;
}

Matching build_matching(const TileFlow& tf, const Tiling& tiling, const IndicatorField& field) {
  const auto& window = field.window();
  const int T = static_cast<int>(tf.tile_count());
  Matching m;
  m.used.assign(static_cast<std::size_t>(T), false);
  for (int R = 0; R < T; ++R) {
    std::int64_t out = 0, in = 0;
    for (int S : tf.neighbours[R]) {
      const auto v = tf.get(R, S);
      (v > 0 ? out : in) += std::abs(v);
    }
    m.used[R] = tf.frontier_flux[R] == 0 && out <= tf.count_A[R] && in <= tf.count_B[R];
  }
  // excluded tiles still hand out points to used neighbours; drop neighbours they cannot serve
  for (bool changed = true; changed;) {
    changed = false;
    for (int S = 0; S < T; ++S) {
      if (m.used[S]) continue;
      std::int64_t need_A = 0, need_B = 0;
      for (int R : tf.neighbours[S]) {
        if (!m.used[R]) continue;
        const auto v = tf.get(R, S);
        if (v > 0) need_B += v;
        if (v < 0) need_A -= v;
      }
      if (need_A <= tf.count_A[S] && need_B <= tf.count_B[S]) continue;
      for (int R : tf.neighbours[S]) {
        if (m.used[R] && tf.get(R, S) != 0) {
          m.used[R] = false;
          ++m.demoted;
          changed = true;
        }
      }
    }
  }

  std::vector<std::vector<std::int64_t>> A(T), B(T);
  for (int R = 0; R < T; ++R) {
    for (auto idx : tiling.tiles[R].vertices()) {
      if (field.in_A(idx)) A[R].push_back(idx);
      if (field.in_B(idx)) B[R].push_back(idx);
    }
  }
  std::vector<std::size_t> nextA(T, 0), nextB(T, 0);
  for (int R = 0; R < T; ++R) {
    for (int S : tf.neighbours[R]) {
      const auto v = tf.get(R, S);
      if (v <= 0 || !(m.used[R] || m.used[S])) continue;
      if (nextA[R] + v > A[R].size() || nextB[S] + v > B[S].size()) {
        throw InvariantViolation("tiles " + std::to_string(R) + " -> " + std::to_string(S) +
                                 " cannot reserve enough points");
      }
      for (std::int64_t l = 0; l < v; ++l) m.pairs.emplace_back(A[R][nextA[R]++], B[S][nextB[S]++]);
    }
  }
  for (int R = 0; R < T; ++R) {
    if (!m.used[R]) continue;
    if (A[R].size() - nextA[R] != B[R].size() - nextB[R]) {
      throw InvariantViolation("tile " + std::to_string(R) + " has unequal leftovers");
    }
    while (nextA[R] < A[R].size()) m.pairs.emplace_back(A[R][nextA[R]++], B[R][nextB[R]++]);
  }
  std::sort(m.pairs.begin(), m.pairs.end());

  std::vector<std::int64_t> targets;
  targets.reserve(m.pairs.size());
  for (const auto& pr : m.pairs) targets.push_back(pr.second);
  std::sort(targets.begin(), targets.end());
  std::size_t ia = 0;
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (!window.in_core(idx)) continue;
    if (field.in_A(idx)) {
      while (ia < m.pairs.size() && m.pairs[ia].first < idx) ++ia;
      if (ia == m.pairs.size() || m.pairs[ia].first != idx) m.unmatched_A.push_back(idx);
    }
    if (field.in_B(idx) && !std::binary_search(targets.begin(), targets.end(), idx)) m.unmatched_B.push_back(idx);
  }
  for (int R = 0; R < T; ++R) m.interior_excluded += tf.interior[R] && !m.used[R];
  return m;
}

std::int64_t gamma_bound(const LatticeWindow& window, const Tiling& tiling) {
  if (tiling.voronoi) return 4 * tiling.K + 2;
  if (!tiling.irregular) return 2 * tiling.K + 4;
  std::int64_t diam = 0;
  for (const auto& t : tiling.tiles) diam = std::max(diam, diameter(window, t));
  return 2 * diam + 4;
}

std::int64_t frontier_reach(const LatticeWindow& window, const Tiling& tiling) {
  std::int64_t reach = 0;
  for (const auto& t : tiling.tiles) {
    std::int64_t shallowest = window.side();
    std::int64_t deepest = 0;
    for (auto idx : t.vertices()) {
      const auto dp = depth(window, window.point(idx));
      shallowest = std::min(shallowest, dp);
      deepest = std::max(deepest, dp);
    }
    if (shallowest == 1) reach = std::max(reach, deepest);
  }
  return reach;
}

PieceMap extract_pieces(const LatticeWindow& window, const Matching& matching, std::int64_t K, std::int64_t bound) {
  const int d = window.d();
  PieceMap pm;
  pm.d = d;
  pm.K = K;
  pm.bound = bound;
  for (const auto& [a, b] : matching.pairs) {
    const Point pa = window.point(a);
    const Point pb = window.point(b);
    Assignment as;
    as.source = a;
    for (int i = 0; i < d; ++i) as.gamma[i] = pb[i] - pa[i];
    if (linf_norm(as.gamma, d) >= bound) {
      throw InvariantViolation("translation " + format_point(as.gamma, d) + " at " + format_point(pa, d) +
                               " exceeds the bound " + std::to_string(bound));
    }
    pm.gammas.push_back(as.gamma);
    pm.assignments.push_back(as);
  }
  std::sort(pm.gammas.begin(), pm.gammas.end());
  pm.gammas.erase(std::unique(pm.gammas.begin(), pm.gammas.end()), pm.gammas.end());
  for (auto& as : pm.assignments) {
    as.piece = static_cast<int>(std::lower_bound(pm.gammas.begin(), pm.gammas.end(), as.gamma) - pm.gammas.begin());
  }
  return pm;
}

double VerifyReport::unmatched_fraction() const {
  const auto total = core_A + core_B;
  return total ? static_cast<double>(unmatched_A + unmatched_B) / static_cast<double>(total) : 0.0;
}

VerifyReport verify_equidecomposition(const PieceMap& pieces, const IndicatorField& field, std::int64_t reach) {
  const auto& window = field.window();
  const int d = window.d();
  VerifyReport rep;
  auto note = [&](std::string msg) {
    if (rep.problems.size() < 50) rep.problems.push_back(std::move(msg));
  };
  if (pieces.d != d) {
    rep.pieces_consistent = false;
    note("piece map dimension " + std::to_string(pieces.d) + " differs from the window's " + std::to_string(d));
    return rep;
  }
  for (std::size_t g = 1; g < pieces.gammas.size(); ++g) {
    if (!(pieces.gammas[g - 1] < pieces.gammas[g])) {
      rep.pieces_consistent = false;
      note("piece translations are not strictly increasing at piece " + std::to_string(g));
    }
  }

  std::vector<std::pair<std::int64_t, int>> sources, images;  // (vertex, piece)
  for (std::size_t row = 0; row < pieces.assignments.size(); ++row) {
    const auto& as = pieces.assignments[row];
    const std::string where = "row " + std::to_string(row + 1);
    if (as.piece < 0 || as.piece >= static_cast<int>(pieces.gammas.size()) || pieces.gammas[as.piece] != as.gamma) {
      rep.pieces_consistent = false;
      note(where + ": piece id does not match its translation");
    }
    if (linf_norm(as.gamma, d) >= pieces.bound) {
      rep.bound_ok = false;
      note(where + ": translation " + format_point(as.gamma, d) + " not below " + std::to_string(pieces.bound));
    }
    if (as.source < 0 || as.source >= window.size() || !window.in_core(as.source) || !field.in_A(as.source)) {
      rep.sources_in_A = false;
      note(where + ": source is not a core point of A");
      continue;
    }
    const Point target = plus(window.point(as.source), as.gamma);
    if (!window.contains(target) || !window.in_core(target) || !field.in_B(window.index(target))) {
      rep.images_in_B = false;
      note(where + ": image " + format_point(target, d) + " is not a core point of B");
      continue;
    }
    sources.emplace_back(as.source, as.piece);
    images.emplace_back(window.index(target), as.piece);
  }
  std::sort(sources.begin(), sources.end());
  std::sort(images.begin(), images.end());
  for (std::size_t k = 1; k < sources.size(); ++k) {
    if (sources[k].first == sources[k - 1].first) {
      rep.pieces_disjoint = false;
      note("point " + format_point(window.point(sources[k].first), d) + " lies in two assignments");
    }
  }
  for (std::size_t k = 1; k < images.size(); ++k) {
    if (images[k].first != images[k - 1].first) continue;
    if (images[k].second != images[k - 1].second) rep.images_disjoint = false;
    rep.injective = false;
    note("point " + format_point(window.point(images[k].first), d) + " is hit twice");
  }
  rep.matched = static_cast<std::int64_t>(pieces.assignments.size());
  const auto distinct = [](const auto& v) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < v.size(); ++k) n += k == 0 || v[k].first != v[k - 1].first;
    return static_cast<std::int64_t>(n);
  };
  if (distinct(sources) != rep.matched || distinct(images) != rep.matched) {
    rep.counts_ok = false;
    note("matched counts differ: " + std::to_string(rep.matched) + " assignments, " +
         std::to_string(distinct(sources)) + " sources, " + std::to_string(distinct(images)) + " images");
  }

  std::size_t is = 0, ii = 0;
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (!window.in_core(idx)) continue;
    const Point p = window.point(idx);
    if (field.in_A(idx)) {
      ++rep.core_A;
      while (is < sources.size() && sources[is].first < idx) ++is;
      if (is == sources.size() || sources[is].first != idx) {
        ++rep.unmatched_A;
        if (depth(window, p) > reach) {
          rep.locality_ok = false;
          note("unmatched A point " + format_point(p, d) + " is far from the frontier");
        }
      }
    }
    if (field.in_B(idx)) {
      ++rep.core_B;
      while (ii < images.size() && images[ii].first < idx) ++ii;
      if (ii == images.size() || images[ii].first != idx) {
        ++rep.unmatched_B;
        if (depth(window, p) > reach) {
          rep.locality_ok = false;
          note("unmatched B point " + format_point(p, d) + " is far from the frontier");
        }
      }
    }
  }
  return rep;
}

}  // namespace circsq

#include "circsq/tiling.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <map>
#include <unordered_map>

#include "circsq/error.hpp"

namespace circsq {
namespace {

// Row-major sub-box [lo, hi) of a window; its index order agrees with the
// window's, so collecting cells in local order gives sorted window indices.
class LocalGrid {
 public:
  LocalGrid(const LatticeWindow& w, const Point& lo, const Point& hi) : w_(w), lo_(lo), hi_(hi) {
    size_ = 1;
    for (int i = w.d() - 1; i >= 0; --i) {
      lo_[i] = std::max<std::int64_t>(lo_[i], 0);
      hi_[i] = std::min<std::int64_t>(hi_[i], w.side());
      strides_[i] = size_;
      size_ *= std::max<std::int64_t>(hi_[i] - lo_[i], 0);
    }
  }

  std::int64_t size() const { return size_; }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  std::int64_t extent(int i) const { return hi_[i] - lo_[i]; }
  std::int64_t stride(int i) const { return strides_[i]; }

  bool contains(const Point& p) const {
    for (int i = 0; i < w_.d(); ++i) {
      if (p[i] < lo_[i] || p[i] >= hi_[i]) return false;
    }
    return true;
  }
  std::int64_t local(const Point& p) const {
    std::int64_t idx = 0;
    for (int i = 0; i < w_.d(); ++i) idx += (p[i] - lo_[i]) * strides_[i];
    return idx;
  }
  Point global_point(std::int64_t local) const {
    Point p{};
    for (int i = 0; i < w_.d(); ++i) {
      p[i] = lo_[i] + local / strides_[i];
      local %= strides_[i];
    }
    return p;
  }
  bool on_border(const Point& p) const {
    for (int i = 0; i < w_.d(); ++i) {
      if (p[i] == lo_[i] || p[i] == hi_[i] - 1) return true;
    }
    return false;
  }

 private:
  const LatticeWindow& w_;
  Point lo_;
  Point hi_;
  std::array<std::int64_t, kMaxDim> strides_{};
  std::int64_t size_ = 0;
};

void bbox(const LatticeWindow& w, const Region& F, Point& lo, Point& hi) {
  const int d = w.d();
  for (int i = 0; i < d; ++i) {
    lo[i] = w.side();
    hi[i] = -1;
  }
  for (auto idx : F.vertices()) {
    const Point p = w.point(idx);
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i] + 1);
    }
  }
}

Point plus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

Region merge(const Region& a, const Region& b) {
  std::vector<std::int64_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.vertices().begin(), a.vertices().end(), b.vertices().begin(), b.vertices().end(),
                 std::back_inserter(out));
  return Region(std::move(out));
}

}  // namespace

Region::Region(std::vector<std::int64_t> vertices) : vertices_(std::move(vertices)) {
  std::sort(vertices_.begin(), vertices_.end());
  vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
}

bool Region::contains(std::int64_t index) const {
  return std::binary_search(vertices_.begin(), vertices_.end(), index);
}

bool is_frontier(const LatticeWindow& window, const Point& p) {
  const std::int64_t m = std::max<std::int64_t>(window.margin(), 1);
  for (int i = 0; i < window.d(); ++i) {
    if (p[i] < m || p[i] >= window.side() - m) return true;
  }
  return false;
}

std::vector<EdgeKey> boundary(const LatticeWindow& window, const Region& F) {
  const auto& dirs = DirectionTable::get(window.d());
  std::vector<EdgeKey> out;
  for (auto idx : F.vertices()) {
    const Point v = window.point(idx);
    for (int i = 0; i < dirs.count(); ++i) {
      const Point w = plus(v, dirs.dir(i));
      if (!window.contains(w)) continue;
      const std::int64_t widx = window.index(w);
      if (F.contains(widx)) continue;
      if (dirs.is_positive(i)) {
        out.push_back({idx, dirs.slot(i)});
      } else {
        out.push_back({widx, dirs.slot(dirs.negation(i))});
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<EdgeKey> boundary_n(const LatticeWindow& window, const Region& F, int n) {
  if (n < 1) throw InvalidArgument("boundary_n needs n >= 1");
  const auto& dirs = DirectionTable::get(window.d());
  std::vector<EdgeKey> current = boundary(window, F);
  for (int step = 1; step < n; ++step) {
    std::vector<std::int64_t> touched;
    for (const auto& e : current) {
      touched.push_back(e.lower);
      touched.push_back(window.index(plus(window.point(e.lower), dirs.dir(dirs.positive_dir(e.slot)))));
    }
    const Region verts(std::move(touched));
    std::vector<EdgeKey> next;
    for (auto idx : verts.vertices()) {
      const Point v = window.point(idx);
      for (int i = 0; i < dirs.count(); ++i) {
        const Point w = plus(v, dirs.dir(i));
        if (!window.contains(w)) continue;
        if (dirs.is_positive(i)) {
          next.push_back({idx, dirs.slot(i)});
        } else {
          next.push_back({window.index(w), dirs.slot(dirs.negation(i))});
        }
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    current = std::move(next);
  }
  return current;
}

bool is_connected(const LatticeWindow& window, const Region& F) {
  if (F.empty()) return true;
  Point lo{}, hi{};
  bbox(window, F, lo, hi);
  const LocalGrid grid(window, lo, hi);
  std::vector<std::uint8_t> state(static_cast<std::size_t>(grid.size()), 0);  // 1 member, 2 reached
  for (auto idx : F.vertices()) state[grid.local(window.point(idx))] = 1;
  const auto& dirs = DirectionTable::get(window.d());
  std::deque<std::int64_t> queue{grid.local(window.point(F.vertices().front()))};
  state[queue.front()] = 2;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Point p = grid.global_point(queue.front());
    queue.pop_front();
    for (int i = 0; i < dirs.count(); ++i) {
      const Point q = plus(p, dirs.dir(i));
      if (!grid.contains(q)) continue;
      const auto l = grid.local(q);
      if (state[l] == 1) {
        state[l] = 2;
        ++reached;
        queue.push_back(l);
      }
    }
  }
  return reached == F.size();
}

std::int64_t diameter(const LatticeWindow& window, const Region& F) {
  if (F.empty()) return 0;
  Point lo{}, hi{};
  bbox(window, F, lo, hi);
  std::int64_t best = 0;
  for (int i = 0; i < window.d(); ++i) best = std::max(best, hi[i] - 1 - lo[i]);
  return best;
}

Region ball(const LatticeWindow& window, const Region& S, std::int64_t r) {
  if (r < 0) throw InvalidArgument("ball radius must be non-negative");
  if (S.empty() || r == 0) return S;
  const int d = window.d();
  Point lo{}, hi{};
  bbox(window, S, lo, hi);
  for (int i = 0; i < d; ++i) {
    lo[i] -= r;
    hi[i] += r;
  }
  const LocalGrid grid(window, lo, hi);
  std::vector<std::uint8_t> mark(static_cast<std::size_t>(grid.size()), 0);
  for (auto idx : S.vertices()) mark[grid.local(window.point(idx))] = 1;
  // sup-norm ball = product of 1-D dilations
  std::vector<std::int64_t> prefix;
  for (int axis = 0; axis < d; ++axis) {
    const std::int64_t n = grid.extent(axis);
    const std::int64_t stride = grid.stride(axis);
    prefix.assign(static_cast<std::size_t>(n + 1), 0);
    for (std::int64_t start = 0; start < grid.size(); ++start) {
      if ((start / stride) % n != 0) continue;  // first cell of each line only
      for (std::int64_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + mark[start + t * stride];
      for (std::int64_t t = 0; t < n; ++t) {
        const std::int64_t a = std::max<std::int64_t>(0, t - r);
        const std::int64_t b = std::min<std::int64_t>(n, t + r + 1);
        mark[start + t * stride] = prefix[b] - prefix[a] > 0 ? 1 : 0;
      }
    }
  }
  std::vector<std::int64_t> out;
  for (std::int64_t l = 0; l < grid.size(); ++l) {
    if (mark[l]) out.push_back(window.index(grid.global_point(l)));
  }
  return Region(std::move(out));
}

Region ball(const LatticeWindow& window, std::int64_t center, std::int64_t r) {
  return ball(window, Region({center}), r);
}

bool within_distance(const LatticeWindow& window, const Region& a, const Region& b, std::int64_t t) {
  if (a.empty() || b.empty()) return false;
  Point alo{}, ahi{}, blo{}, bhi{};
  bbox(window, a, alo, ahi);
  bbox(window, b, blo, bhi);
  for (int i = 0; i < window.d(); ++i) {
    const std::int64_t gap = std::max(blo[i] - (ahi[i] - 1), alo[i] - (bhi[i] - 1));
    if (gap > t) return false;
  }
  const Region grown = ball(window, a, t);
  const auto& small = grown.size() < b.size() ? grown : b;
  const auto& big = grown.size() < b.size() ? b : grown;
  for (auto idx : small.vertices()) {
    if (big.contains(idx)) return true;
  }
  return false;
}

Region fill_holes(const LatticeWindow& window, const Region& S) {
  for (auto idx : S.vertices()) {
    if (is_frontier(window, window.point(idx))) {
      throw InvalidArgument("region touches the frontier at " + format_point(window.point(idx), window.d()));
    }
  }
  if (S.empty()) return S;
  const int d = window.d();
  Point lo{}, hi{};
  bbox(window, S, lo, hi);
  for (int i = 0; i < d; ++i) {
    --lo[i];
    ++hi[i];
  }
  const LocalGrid grid(window, lo, hi);
  std::vector<std::int32_t> comp(static_cast<std::size_t>(grid.size()), -1);
  for (auto idx : S.vertices()) comp[grid.local(window.point(idx))] = -2;
  const auto& dirs = DirectionTable::get(d);
  std::vector<std::int64_t> added;
  std::int32_t next_id = 0;
  for (std::int64_t start = 0; start < grid.size(); ++start) {
    if (comp[start] != -1) continue;
    std::vector<std::int64_t> members{start};
    comp[start] = next_id;
    bool escapes = false;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Point p = grid.global_point(members[k]);
      if (grid.on_border(p) || is_frontier(window, p)) escapes = true;
      for (int i = 0; i < dirs.count(); ++i) {
        const Point q = plus(p, dirs.dir(i));
        if (!grid.contains(q)) continue;
        const auto l = grid.local(q);
        if (comp[l] == -1) {
          comp[l] = next_id;
          members.push_back(l);
        }
      }
    }
    if (!escapes) {
      for (auto l : members) added.push_back(window.index(grid.global_point(l)));
    }
    ++next_id;
  }
  if (added.empty()) return S;
  added.insert(added.end(), S.vertices().begin(), S.vertices().end());
  return Region(std::move(added));
}

Net greedy_net(const LatticeWindow& window, std::int64_t r, const Region& eligible) {
  if (r < 1) throw InvalidArgument("net radius must be at least 1");
  const int d = window.d();
  Net net;
  net.r = r;
  // buckets of side r+1: anything within distance r sits in a neighbouring bucket
  std::map<Point, std::vector<Point>> buckets;
  const std::int64_t cell = r + 1;
  std::int64_t neighbourhood = 1;
  for (int i = 0; i < d; ++i) neighbourhood *= 3;
  for (auto idx : eligible.vertices()) {
    const Point p = window.point(idx);
    Point key{};
    for (int i = 0; i < d; ++i) key[i] = p[i] / cell;
    bool free = true;
    for (std::int64_t code = 0; code < neighbourhood && free; ++code) {
      Point nk = key;
      std::int64_t c = code;
      for (int i = 0; i < d; ++i) {
        nk[i] += c % 3 - 1;
        c /= 3;
      }
      auto it = buckets.find(nk);
      if (it == buckets.end()) continue;
      for (const auto& q : it->second) {
        std::int64_t dist = 0;
        for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(p[i] - q[i]));
        if (dist <= r) {
          free = false;
          break;
        }
      }
    }
    if (free) {
      buckets[key].push_back(p);
      net.points.push_back(idx);
    }
  }
  return net;
}

std::vector<Region> enlarge(const LatticeWindow& window, const std::vector<Region>& Y, const std::vector<Region>& Z,
                            std::int64_t r) {
  for (std::size_t a = 0; a < Z.size(); ++a) {
    if (diameter(window, Z[a]) > r) throw InvalidArgument("enlarge: an element of Z has diameter above r");
    for (std::size_t b = a + 1; b < Z.size(); ++b) {
      if (within_distance(window, Z[a], Z[b], 2 * r)) throw InvalidArgument("enlarge: elements of Z within 2r");
    }
  }
  for (std::size_t a = 0; a < Y.size(); ++a) {
    for (std::size_t b = a + 1; b < Y.size(); ++b) {
      if (within_distance(window, Y[a], Y[b], 6 * r)) throw InvalidArgument("enlarge: elements of Y within 6r");
    }
  }
  std::vector<Region> out;
  out.reserve(Y.size());
  for (const auto& S : Y) {
    Region Q = S;
    for (const auto& R : Z) {
      if (within_distance(window, R, S, r)) Q = merge(Q, ball(window, R, r));
    }
    out.push_back(std::move(Q));
  }
  return out;
}

Region core_region(const LatticeWindow& window) {
  std::vector<std::int64_t> out;
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (window.in_core(idx)) out.push_back(idx);
  }
  return Region(std::move(out));
}

namespace {

Region shrunk_core(const LatticeWindow& window, std::int64_t by) {
  std::vector<std::int64_t> out;
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    const Point p = window.point(idx);
    bool ok = true;
    for (int i = 0; i < window.d() && ok; ++i) {
      ok = p[i] >= window.core_lo() + by && p[i] < window.core_hi() - by;
    }
    if (ok) out.push_back(idx);
  }
  return Region(std::move(out));
}

bool clear_of_frontier(const LatticeWindow& window, const Region& S, std::int64_t n) {
  Point lo{}, hi{};
  bbox(window, S, lo, hi);
  for (int i = 0; i < window.d(); ++i) {
    if (lo[i] - n < window.core_lo() || hi[i] + n > window.core_hi()) return false;
  }
  return true;
}

}  // namespace

Cover boundary_disjoint_cover(const LatticeWindow& window, int n, int levels) {
  if (n < 1) throw InvalidArgument("cover separation n must be at least 1");
  if (levels < 0 || levels > 6) throw InvalidArgument("cover levels must be in [0, 6]");
  Cover cover;
  cover.n = n;
  std::int64_t r = n;
  for (int i = 0; i <= levels; ++i) {
    r *= 12;
    cover.radii.push_back(r);
  }

  std::vector<std::vector<Region>> D(levels + 1);
  for (int i = 0; i <= levels; ++i) {
    const std::int64_t ri = cover.radii[i];
    // centres far enough in that the finished region and its n-ball stay in the core
    const Region eligible = shrunk_core(window, ri / 2 + n + 1);
    if (eligible.empty()) {
      throw InvalidArgument("window too small for cover level " + std::to_string(i) + " (r = " + std::to_string(ri) + ")");
    }
    const Net net = greedy_net(window, 4 * ri, eligible);
    std::vector<Region> layer;
    for (auto c : net.points) layer.push_back(ball(window, c, ri / 4));
    for (int j = 1; j <= i; ++j) layer = enlarge(window, layer, D[i - j], cover.radii[i - j]);
    D[i] = std::move(layer);
  }

  const Region core = core_region(window);
  std::vector<std::int64_t> covered;
  for (int i = 0; i <= levels; ++i) {
    for (const auto& S : D[i]) {
      if (!clear_of_frontier(window, S, n)) continue;
      Region filled = fill_holes(window, S);
      if (!clear_of_frontier(window, filled, n)) continue;
      covered.insert(covered.end(), filled.vertices().begin(), filled.vertices().end());
      cover.regions.push_back({std::move(filled), i});
    }
  }
  cover.core_vertices = static_cast<std::int64_t>(core.size());
  cover.covered_vertices = static_cast<std::int64_t>(Region(std::move(covered)).size());
  return cover;
}

CoverReport check_cover(const LatticeWindow& window, const Cover& cover) {
  CoverReport report;
  auto note = [&](std::string msg) { report.problems.push_back(std::move(msg)); };
  std::vector<std::pair<EdgeKey, int>> owners;
  for (std::size_t a = 0; a < cover.regions.size(); ++a) {
    const auto& [S, level] = cover.regions[a];
    const std::string tag = "region " + std::to_string(a) + " (level " + std::to_string(level) + ")";
    if (!is_connected(window, S)) {
      report.connected = false;
      note(tag + " is not connected");
    }
    if (diameter(window, S) > cover.radii[level]) {
      report.diameters_ok = false;
      note(tag + " has diameter " + std::to_string(diameter(window, S)));
    }
    if (fill_holes(window, S).size() != S.size()) {
      report.hole_free = false;
      note(tag + " has holes");
    }
    for (const auto& e : boundary_n(window, S, cover.n)) owners.emplace_back(e, static_cast<int>(a));
    for (std::size_t b = a + 1; b < cover.regions.size(); ++b) {
      if (cover.regions[b].level != level) continue;
      if (within_distance(window, S, cover.regions[b].region, 2 * cover.radii[level] - 1)) {
        report.separation_ok = false;
        note(tag + " and region " + std::to_string(b) + " are closer than 2r");
      }
    }
  }
  std::sort(owners.begin(), owners.end());
  for (std::size_t k = 1; k < owners.size(); ++k) {
    if (owners[k].first == owners[k - 1].first && owners[k].second != owners[k - 1].second) {
      report.boundaries_disjoint = false;
      note("regions " + std::to_string(owners[k - 1].second) + " and " + std::to_string(owners[k].second) +
           " share a boundary edge");
      break;
    }
  }
  return report;
}

std::vector<std::int64_t> split_side(std::int64_t side, std::int64_t K, bool* irregular) {
  if (K < 1) throw InvalidArgument("tile side K must be at least 1");
  if (K > side) throw InvalidArgument("tile side K exceeds the core side");
  const std::int64_t q = side / K;
  const std::int64_t rem = side % K;
  std::vector<std::int64_t> parts;
  if (rem <= q) {
    parts.assign(static_cast<std::size_t>(q - rem), K);
    parts.insert(parts.end(), static_cast<std::size_t>(rem), K + 1);
  } else {
    // not expressible with K and K+1: one wide strip at the end
    parts.assign(static_cast<std::size_t>(q - 1), K);
    parts.push_back(K + rem);
    if (irregular) *irregular = true;
  }
  return parts;
}

Tiling rect_tiling(const LatticeWindow& window, std::int64_t K) {
  const int d = window.d();
  Tiling tiling;
  tiling.K = K;
  const auto parts = split_side(window.core_side(), K, &tiling.irregular);
  std::vector<std::int64_t> starts{window.core_lo()};
  for (auto p : parts) starts.push_back(starts.back() + p);
  const std::int64_t per_axis = static_cast<std::int64_t>(parts.size());
  std::int64_t count = 1;
  for (int i = 0; i < d; ++i) count *= per_axis;
  tiling.tile_of.assign(static_cast<std::size_t>(window.size()), -1);
  for (std::int64_t t = 0; t < count; ++t) {
    std::array<std::int64_t, kMaxDim> which{};
    std::int64_t rem = t;
    for (int i = d - 1; i >= 0; --i) {
      which[i] = rem % per_axis;
      rem /= per_axis;
    }
    std::vector<std::int64_t> cells;
    std::int64_t volume = 1;
    for (int i = 0; i < d; ++i) volume *= parts[which[i]];
    cells.reserve(static_cast<std::size_t>(volume));
    for (std::int64_t c = 0; c < volume; ++c) {
      Point p{};
      std::int64_t r2 = c;
      for (int i = d - 1; i >= 0; --i) {
        p[i] = starts[which[i]] + r2 % parts[which[i]];
        r2 /= parts[which[i]];
      }
      const auto idx = window.index(p);
      cells.push_back(idx);
      tiling.tile_of[idx] = static_cast<std::int32_t>(t);
    }
    tiling.tiles.emplace_back(std::move(cells));
  }
  return tiling;
}

Tiling voronoi_tiling(const LatticeWindow& window, const Net& net) {
  if (net.points.empty()) throw InvalidArgument("Voronoi tiling needs a non-empty net");
  const int d = window.d();
  std::vector<Point> seeds;
  for (auto s : net.points) seeds.push_back(window.point(s));
  std::vector<std::size_t> order(seeds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return net.points[a] < net.points[b]; });

  std::vector<std::vector<std::int64_t>> cells(seeds.size());
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (!window.in_core(idx)) continue;
    const Point y = window.point(idx);
    std::size_t best = order[0];
    std::int64_t best_dist = -1;
    for (auto s : order) {  // lexicographic seed order breaks ties toward the least seed
      std::int64_t dist = 0;
      for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(y[i] - seeds[s][i]));
      if (best_dist < 0 || dist < best_dist) {
        best_dist = dist;
        best = s;
      }
    }
    cells[best].push_back(idx);
  }
  Tiling tiling;
  tiling.K = net.r;
  tiling.voronoi = true;
  std::vector<Region> regions;
  for (auto& c : cells) {
    if (!c.empty()) regions.emplace_back(std::move(c));
  }
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.vertices().front() < b.vertices().front(); });
  tiling.tile_of.assign(static_cast<std::size_t>(window.size()), -1);
  for (std::size_t t = 0; t < regions.size(); ++t) {
    for (auto idx : regions[t].vertices()) tiling.tile_of[idx] = static_cast<std::int32_t>(t);
  }
  tiling.tiles = std::move(regions);
  return tiling;
}

}  // namespace circsq

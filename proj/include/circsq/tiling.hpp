#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "circsq/lattice.hpp"

namespace circsq {

// Finite vertex set of a window, kept as sorted window indices.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<std::int64_t> vertices);

  const std::vector<std::int64_t>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  bool contains(std::int64_t index) const;

 private:
  std::vector<std::int64_t> vertices_;
};

// Unordered edge {lower, lower + g} with g the slot-th positive direction.
struct EdgeKey {
  std::int64_t lower = 0;
  int slot = 0;
  auto operator<=>(const EdgeKey&) const = default;
};

// Vertices standing in for "infinity": outside the core, or on the window's
// outer layer when the margin is zero.
bool is_frontier(const LatticeWindow& window, const Point& p);

std::vector<EdgeKey> boundary(const LatticeWindow& window, const Region& F);
std::vector<EdgeKey> boundary_n(const LatticeWindow& window, const Region& F, int n);

bool is_connected(const LatticeWindow& window, const Region& F);
std::int64_t diameter(const LatticeWindow& window, const Region& F);
// d(a, b) <= t in the graph metric (sup-norm distance)
bool within_distance(const LatticeWindow& window, const Region& a, const Region& b, std::int64_t t);

// S plus every complementary component that cannot reach the frontier.
Region fill_holes(const LatticeWindow& window, const Region& S);

struct Net {
  std::vector<std::int64_t> points;
  std::int64_t r = 0;
};

// Lexicographic greedy sweep over `eligible`: keep a vertex iff every kept
// vertex is farther than r.
Net greedy_net(const LatticeWindow& window, std::int64_t r, const Region& eligible);

Region ball(const LatticeWindow& window, const Region& S, std::int64_t r);
Region ball(const LatticeWindow& window, std::int64_t center, std::int64_t r);

// For each S in Y: S together with B_r(R) for every R in Z within distance r.
// Rejects inputs violating the size and spacing hypotheses.
std::vector<Region> enlarge(const LatticeWindow& window, const std::vector<Region>& Y, const std::vector<Region>& Z,
                            std::int64_t r);

struct CoverRegion {
  Region region;
  int level = 0;
};

struct Cover {
  int n = 0;
  std::vector<std::int64_t> radii;  // r_i = n 12^{i+1}
  std::vector<CoverRegion> regions;
  std::int64_t core_vertices = 0;
  std::int64_t covered_vertices = 0;
  double coverage() const {
    return core_vertices ? 100.0 * static_cast<double>(covered_vertices) / static_cast<double>(core_vertices) : 0.0;
  }
};

Cover boundary_disjoint_cover(const LatticeWindow& window, int n, int levels);

struct CoverReport {
  bool boundaries_disjoint = true;
  bool connected = true;
  bool diameters_ok = true;
  bool separation_ok = true;
  bool hole_free = true;
  std::vector<std::string> problems;
  bool ok() const { return boundaries_disjoint && connected && diameters_ok && separation_ok && hole_free; }
};

CoverReport check_cover(const LatticeWindow& window, const Cover& cover);

struct Tiling {
  std::vector<Region> tiles;      // in lexicographic order of least vertex
  std::vector<std::int32_t> tile_of;  // window index -> tile, -1 outside the core
  std::int64_t K = 0;
  bool irregular = false;  // some tile side is outside {K, K+1}
  bool voronoi = false;
};

Tiling rect_tiling(const LatticeWindow& window, std::int64_t K);
// Side lengths of the per-axis split used by rect_tiling.
std::vector<std::int64_t> split_side(std::int64_t side, std::int64_t K, bool* irregular = nullptr);

Tiling voronoi_tiling(const LatticeWindow& window, const Net& net);

Region core_region(const LatticeWindow& window);

}  // namespace circsq

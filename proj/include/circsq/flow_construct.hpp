#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "circsq/dyadic.hpp"
#include "circsq/edge_field.hpp"
#include "circsq/lattice.hpp"

namespace circsq {

// Axis-aligned cube [lo, lo+side)^d.
struct Box {
  Point lo{};
  std::int64_t side = 0;
  bool contains(const Point& p, int d) const;
  bool inside(const LatticeWindow& w) const;
};

// Box of side 2^n in the partition with phase `offset` that contains y.
Box box_of(const Point& y, const Point& offset, int n, int d);

// Number of segment start points z = y - i*gamma (0 <= i < 2^{n-1}) whose
// segment z, z+gamma, ..., z+2^{n-1}gamma stays inside box_of(y).
std::int64_t segment_count(const Point& y, const Point& gamma, const Point& offset, int n, int d);

// The side-2^{n-1} sub-box of box_of(y) holding every such start point.
Box segment_subbox(const Point& y, const Point& gamma, const Point& offset, int n, int d);

class BoxPrefixSums {
 public:
  explicit BoxPrefixSums(const IndicatorField& field);

  const LatticeWindow& window() const { return window_; }
  int value(const Point& p) const { return values_[window_.index(p)]; }
  int value(std::int64_t index) const { return values_[index]; }

  // sum of f over [lo, hi) intersected with the window
  std::int64_t box_sum(const Point& lo, const Point& hi) const;
  std::int64_t box_sum(const Box& box) const;

  // Cube sums of the given side at every corner whose cube fits in the
  // window, indexed by the corner's window index; other entries are 0.
  std::vector<std::int64_t> cube_table(std::int64_t side) const;

 private:
  LatticeWindow window_;
  std::vector<int> values_;
  std::vector<std::int64_t> prefix_;  // (L+1)^d, entry at p = sum over [0,p)
  std::array<std::int64_t, kMaxDim> pstrides_{};
};

// One level-n edge function value for the partition with phase `offset`.
// Throws InvalidArgument when the box leaves the window.
Dyadic phi_edge(const Point& y, const Point& gamma, const Point& offset, int n, const BoxPrefixSums& sums);

// Base vertex plus compatible cosets h_0..h_n, h_i in [0,2^i)^d with
// h_i = h_{i-1} mod 2^{i-1}. Level-i boxes have phase (base + h_i) mod 2^i.
struct Chain {
  Point base{};
  std::vector<Point> cosets;

  int level() const { return static_cast<int>(cosets.size()) - 1; }
  Point phase(int i, int d) const;
  void validate(int d) const;
};

Dyadic psi_chain(const Chain& chain, const Point& y, const Point& gamma, const BoxPrefixSums& sums);

// (f(y) - sum_gamma psi_chain(y, gamma), 2^{-nd} * sum of f over y's level-n box)
std::pair<Dyadic, Dyadic> check_error_identity(const Chain& chain, const Point& y, const BoxPrefixSums& sums);

// 2^{-nd} sum over all phases of [phi(y, y+g) - phi(y+g, y)]; phases are
// enumerated as (base + h) mod 2^n for h in [0,2^n)^d, base defaults to y.
Dyadic level_sum(const Point& y, const Point& gamma, int n, const BoxPrefixSums& sums,
                 std::optional<Point> base = std::nullopt);

// Edges whose level-N0 boxes all stay inside the window.
bool psi_edge_valid(const LatticeWindow& window, int N0, const Point& lower, const Point& upper);

// Sum of level_sum over n = 1..N0 on every valid edge stored in the field's
// box; invalid edges stay 0. Uses cube-sum tables instead of per-phase
// evaluation, so it agrees with level_sum exactly but runs much faster.
EdgeField<Dyadic> truncated_psi(const BoxPrefixSums& sums, int N0);
EdgeField<Dyadic> truncated_psi(const BoxPrefixSums& sums, int N0, const Point& lo, const Point& hi);

// (2M / 2^{d-1}) 2^{-N0 eps} / (1 - 2^{-eps}), rounded up
double tail_bound(int N0, double M, double eps, int d);
double flow_bound(double M, double eps, int d);

// Largest |cube sum| at sides 2^0 .. 2^max_level over the window.
struct CubeSumBounds {
  int d = 0;
  std::vector<std::int64_t> phi;  // phi[n] for side 2^n

  // Phi(2^N0) / 2^{N0 d}
  Dyadic deviation_bound(int N0) const;
  // sum_{n=1}^{N0} 2 * 2^{n-1} Phi(2^{n-1}) / 2^{nd}
  Dyadic psi_bound(int N0) const;
};

CubeSumBounds measure_cube_sums(const BoxPrefixSums& sums, int max_level);

}  // namespace circsq

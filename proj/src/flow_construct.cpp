#include "circsq/flow_construct.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "circsq/error.hpp"

namespace circsq {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t mod_pos(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

void check_level(int n) {
  if (n < 0 || n > 30) throw InvalidArgument("level out of range");
}

// count of start points for position p of y inside its side-2^n box
std::int64_t count_at(const Point& p, const Point& gamma, int n, int d) {
  if (n == 0) return 0;
  const std::int64_t H = std::int64_t{1} << (n - 1);
  std::int64_t lo = 0;
  std::int64_t hi = H;
  for (int j = 0; j < d; ++j) {
    if (gamma[j] == 1) {
      lo = std::max(lo, p[j] - H + 1);
      hi = std::min(hi, p[j] + 1);
    } else if (gamma[j] == -1) {
      lo = std::max(lo, H - p[j]);
      hi = std::min(hi, 2 * H - p[j]);
    }
  }
  return std::max<std::int64_t>(0, hi - lo);
}

// corner of the holding sub-box relative to the box corner
Point subbox_offset(const Point& p, const Point& gamma, int n, int d) {
  const std::int64_t H = std::int64_t{1} << (n - 1);
  Point q{};
  for (int j = 0; j < d; ++j) {
    if (gamma[j] == 1) {
      q[j] = 0;
    } else if (gamma[j] == -1) {
      q[j] = H;
    } else {
      q[j] = p[j] >= H ? H : 0;
    }
  }
  return q;
}

void check_direction(const Point& gamma, int d) {
  if (linf_norm(gamma, d) != 1) throw InvalidArgument("direction must have sup-norm 1");
  for (int j = d; j < kMaxDim; ++j) {
    if (gamma[j] != 0) throw InvalidArgument("direction has entries beyond d");
  }
}

Point plus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

Point negate(const Point& a) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = -a[i];
  return r;
}

}  // namespace

bool Box::contains(const Point& p, int d) const {
  for (int i = 0; i < d; ++i) {
    if (p[i] < lo[i] || p[i] >= lo[i] + side) return false;
  }
  return true;
}

bool Box::inside(const LatticeWindow& w) const {
  for (int i = 0; i < w.d(); ++i) {
    if (lo[i] < 0 || lo[i] + side > w.side()) return false;
  }
  return true;
}

Box box_of(const Point& y, const Point& offset, int n, int d) {
  check_level(n);
  const std::int64_t side = std::int64_t{1} << n;
  Box b;
  b.side = side;
  for (int j = 0; j < d; ++j) b.lo[j] = offset[j] + side * floor_div(y[j] - offset[j], side);
  return b;
}

std::int64_t segment_count(const Point& y, const Point& gamma, const Point& offset, int n, int d) {
  check_direction(gamma, d);
  const Box b = box_of(y, offset, n, d);
  Point p{};
  for (int j = 0; j < d; ++j) p[j] = y[j] - b.lo[j];
  return count_at(p, gamma, n, d);
}

Box segment_subbox(const Point& y, const Point& gamma, const Point& offset, int n, int d) {
  check_direction(gamma, d);
  if (n < 1) throw InvalidArgument("sub-boxes need level n >= 1");
  const Box b = box_of(y, offset, n, d);
  Point p{};
  for (int j = 0; j < d; ++j) p[j] = y[j] - b.lo[j];
  const Point q = subbox_offset(p, gamma, n, d);
  Box out;
  out.side = b.side / 2;
  for (int j = 0; j < d; ++j) out.lo[j] = b.lo[j] + q[j];
  return out;
}

// ---------------------------------------------------------------- prefix sums

BoxPrefixSums::BoxPrefixSums(const IndicatorField& field) : window_(field.window()), values_(field.values()) {
  const int d = window_.d();
  const std::int64_t P = window_.side() + 1;
  std::int64_t total = 1;
  for (int i = d - 1; i >= 0; --i) {
    pstrides_[i] = total;
    total *= P;
  }
  prefix_.assign(static_cast<std::size_t>(total), 0);
  for (std::int64_t idx = 0; idx < window_.size(); ++idx) {
    const Point p = window_.point(idx);
    std::int64_t pi = 0;
    for (int i = 0; i < d; ++i) pi += (p[i] + 1) * pstrides_[i];
    prefix_[pi] = values_[idx];
  }
  for (int axis = 0; axis < d; ++axis) {
    for (std::int64_t pi = 0; pi < total; ++pi) {
      const std::int64_t coord = (pi / pstrides_[axis]) % P;
      if (coord > 0) prefix_[pi] += prefix_[pi - pstrides_[axis]];
    }
  }
}

std::int64_t BoxPrefixSums::box_sum(const Point& lo_in, const Point& hi_in) const {
  const int d = window_.d();
  Point lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    lo[i] = std::clamp<std::int64_t>(lo_in[i], 0, window_.side());
    hi[i] = std::clamp<std::int64_t>(hi_in[i], 0, window_.side());
    if (lo[i] >= hi[i]) return 0;
  }
  std::int64_t total = 0;
  for (int mask = 0; mask < (1 << d); ++mask) {
    std::int64_t pi = 0;
    int lows = 0;
    for (int i = 0; i < d; ++i) {
      if (mask & (1 << i)) {
        pi += hi[i] * pstrides_[i];
      } else {
        pi += lo[i] * pstrides_[i];
        ++lows;
      }
    }
    total += (lows % 2 == 0) ? prefix_[pi] : -prefix_[pi];
  }
  return total;
}

std::int64_t BoxPrefixSums::box_sum(const Box& box) const {
  Point hi = box.lo;
  for (int i = 0; i < window_.d(); ++i) hi[i] += box.side;
  return box_sum(box.lo, hi);
}

std::vector<std::int64_t> BoxPrefixSums::cube_table(std::int64_t side) const {
  std::vector<std::int64_t> table(static_cast<std::size_t>(window_.size()), 0);
  if (side < 1 || side > window_.side()) return table;
  for (std::int64_t idx = 0; idx < window_.size(); ++idx) {
    const Box b{window_.point(idx), side};
    if (b.inside(window_)) table[idx] = box_sum(b);
  }
  return table;
}

// ---------------------------------------------------------------- edge functions

Dyadic phi_edge(const Point& y, const Point& gamma, const Point& offset, int n, const BoxPrefixSums& sums) {
  const int d = sums.window().d();
  check_direction(gamma, d);
  if (n < 1) throw InvalidArgument("edge functions need level n >= 1");
  const Box b = box_of(y, offset, n, d);
  if (!b.inside(sums.window())) {
    throw InvalidArgument("level-" + std::to_string(n) + " box at " + format_point(b.lo, d) + " leaves the window");
  }
  const std::int64_t count = segment_count(y, gamma, offset, n, d);
  if (count == 0) return Dyadic();
  const std::int64_t sub = sums.box_sum(segment_subbox(y, gamma, offset, n, d));
  return Dyadic(count * sub, static_cast<std::uint32_t>(n * d));
}

Point Chain::phase(int i, int d) const {
  const std::int64_t m = std::int64_t{1} << i;
  Point o{};
  for (int j = 0; j < d; ++j) o[j] = mod_pos(base[j] + cosets[i][j], m);
  return o;
}

void Chain::validate(int d) const {
  if (cosets.empty()) throw InvalidArgument("chain needs h_0");
  for (std::size_t i = 0; i < cosets.size(); ++i) {
    const std::int64_t m = std::int64_t{1} << i;
    for (int j = 0; j < d; ++j) {
      if (cosets[i][j] < 0 || cosets[i][j] >= m) throw InvalidArgument("coset entry out of range");
      if (i > 0 && cosets[i][j] % (m / 2) != cosets[i - 1][j]) {
        throw InvalidArgument("incompatible chain at level " + std::to_string(i));
      }
    }
  }
}

Dyadic psi_chain(const Chain& chain, const Point& y, const Point& gamma, const BoxPrefixSums& sums) {
  const int d = sums.window().d();
  chain.validate(d);
  check_direction(gamma, d);
  const Point z = plus(y, gamma);
  const Point back = negate(gamma);
  Dyadic total;
  for (int i = 1; i <= chain.level(); ++i) {
    const Point o = chain.phase(i, d);
    total += phi_edge(y, gamma, o, i, sums);
    total -= phi_edge(z, back, o, i, sums);
  }
  return total;
}

std::pair<Dyadic, Dyadic> check_error_identity(const Chain& chain, const Point& y, const BoxPrefixSums& sums) {
  const int d = sums.window().d();
  chain.validate(d);
  const int n = chain.level();
  const Box b = box_of(y, chain.phase(n, d), n, d);
  if (!b.inside(sums.window())) throw InvalidArgument("window too small for the chain level");
  Dyadic lhs(sums.value(y));
  const auto& dirs = DirectionTable::get(d);
  for (int i = 0; i < dirs.count(); ++i) lhs -= psi_chain(chain, y, dirs.dir(i), sums);
  Dyadic rhs(sums.box_sum(b), static_cast<std::uint32_t>(n * d));
  return {lhs, rhs};
}

Dyadic level_sum(const Point& y, const Point& gamma, int n, const BoxPrefixSums& sums, std::optional<Point> base) {
  const int d = sums.window().d();
  check_direction(gamma, d);
  if (n < 1) throw InvalidArgument("level_sum needs n >= 1");
  const Point origin = base.value_or(y);
  const std::int64_t m = std::int64_t{1} << n;
  std::int64_t phases = 1;
  for (int j = 0; j < d; ++j) phases *= m;
  const Point z = plus(y, gamma);
  const Point back = negate(gamma);
  Dyadic total;
  Point h{};
  for (std::int64_t t = 0; t < phases; ++t) {
    std::int64_t rem = t;
    for (int j = d - 1; j >= 0; --j) {
      h[j] = rem % m;
      rem /= m;
    }
    Point o{};
    for (int j = 0; j < d; ++j) o[j] = mod_pos(origin[j] + h[j], m);
    total += phi_edge(y, gamma, o, n, sums);
    total -= phi_edge(z, back, o, n, sums);
  }
  return total.scale_pow2(-static_cast<std::int64_t>(n) * d);
}

bool psi_edge_valid(const LatticeWindow& window, int N0, const Point& lower, const Point& upper) {
  const std::int64_t reach = std::int64_t{1} << N0;
  for (int j = 0; j < window.d(); ++j) {
    const std::int64_t a = std::min(lower[j], upper[j]);
    const std::int64_t b = std::max(lower[j], upper[j]);
    if (a < reach - 1 || b > window.side() - reach) return false;
  }
  return true;
}

EdgeField<Dyadic> truncated_psi(const BoxPrefixSums& sums, int N0) {
  Point lo{}, hi{};
  for (int j = 0; j < sums.window().d(); ++j) hi[j] = sums.window().side();
  return truncated_psi(sums, N0, lo, hi);
}

EdgeField<Dyadic> truncated_psi(const BoxPrefixSums& sums, int N0, const Point& lo, const Point& hi) {
  const LatticeWindow& w = sums.window();
  const int d = w.d();
  if (N0 < 1) throw InvalidArgument("N0 must be at least 1");
  if ((std::int64_t{1} << N0) > w.side() - 2 * w.margin()) throw InvalidArgument("N0 too large for the window");
  const auto& dirs = DirectionTable::get(d);
  const int P = dirs.positive_count();

  // plan[n-1][s]: (index offset, weight) with T = sum weight * cube_{2^{n-1}}[idx(y) + offset]
  std::vector<std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>>> plan(N0);
  std::vector<std::vector<std::int64_t>> cubes(N0);
  for (int n = 1; n <= N0; ++n) {
    cubes[n - 1] = sums.cube_table(std::int64_t{1} << (n - 1));
    const std::int64_t m = std::int64_t{1} << n;
    std::int64_t positions = 1;
    for (int j = 0; j < d; ++j) positions *= m;
    plan[n - 1].resize(P);
    for (int s = 0; s < P; ++s) {
      const Point g = dirs.dir(dirs.positive_dir(s));
      const Point back = negate(g);
      std::map<Point, std::int64_t> weights;
      Point p{};
      for (std::int64_t t = 0; t < positions; ++t) {
        std::int64_t rem = t;
        for (int j = d - 1; j >= 0; --j) {
          p[j] = rem % m;
          rem /= m;
        }
        if (const std::int64_t c1 = count_at(p, g, n, d); c1 > 0) {
          const Point q = subbox_offset(p, g, n, d);
          Point delta{};
          for (int j = 0; j < d; ++j) delta[j] = q[j] - p[j];
          weights[delta] += c1;
        }
        Point p2{};
        for (int j = 0; j < d; ++j) p2[j] = mod_pos(p[j] + g[j], m);
        if (const std::int64_t c2 = count_at(p2, back, n, d); c2 > 0) {
          const Point q = subbox_offset(p2, back, n, d);
          Point delta{};
          for (int j = 0; j < d; ++j) delta[j] = g[j] - p2[j] + q[j];
          weights[delta] -= c2;
        }
      }
      for (const auto& [delta, weight] : weights) {
        if (weight != 0) plan[n - 1][s].emplace_back(w.index(delta), weight);
      }
    }
  }

  EdgeField<Dyadic> psi(w, lo, hi);
  psi.for_each_edge([&](const Point& lower, int s, Dyadic& value) {
    const Point upper = plus(lower, dirs.dir(dirs.positive_dir(s)));
    if (!psi_edge_valid(w, N0, lower, upper)) return;
    const std::int64_t base = w.index(lower);
    Dyadic acc;
    for (int n = 1; n <= N0; ++n) {
      std::int64_t T = 0;
      const auto& cube = cubes[n - 1];
      for (const auto& [off, weight] : plan[n - 1][s]) T += weight * cube[base + off];
      acc += Dyadic(T, static_cast<std::uint32_t>(2 * n * d));
    }
    value = std::move(acc);
  });
  return psi;
}

double tail_bound(int N0, double M, double eps, int d) {
  if (!(eps > 0.0)) throw InvalidArgument("tail bound needs eps > 0");
  if (M < 0.0) throw InvalidArgument("tail bound needs M >= 0");
  if (M == 0.0) return 0.0;
  const double v = (2.0 * M / std::ldexp(1.0, d - 1)) * std::exp2(-N0 * eps) / (1.0 - std::exp2(-eps));
  return std::nextafter(v, std::numeric_limits<double>::infinity());
}

double flow_bound(double M, double eps, int d) { return tail_bound(0, M, eps, d); }

Dyadic CubeSumBounds::deviation_bound(int N0) const {
  if (N0 < 0 || N0 >= static_cast<int>(phi.size())) throw InvalidArgument("no cube-sum bound at that level");
  return Dyadic(phi[N0], static_cast<std::uint32_t>(N0 * d));
}

Dyadic CubeSumBounds::psi_bound(int N0) const {
  if (N0 < 0 || N0 >= static_cast<int>(phi.size())) throw InvalidArgument("no cube-sum bound at that level");
  Dyadic total;
  for (int n = 1; n <= N0; ++n) {
    total += Dyadic(phi[n - 1] << n, static_cast<std::uint32_t>(n * d));
  }
  return total;
}

CubeSumBounds measure_cube_sums(const BoxPrefixSums& sums, int max_level) {
  CubeSumBounds out;
  out.d = sums.window().d();
  for (int n = 0; n <= max_level; ++n) {
    const std::int64_t side = std::int64_t{1} << n;
    if (side > sums.window().side()) throw InvalidArgument("cube side exceeds the window");
    std::int64_t best = 0;
    for (std::int64_t idx = 0; idx < sums.window().size(); ++idx) {
      const Box b{sums.window().point(idx), side};
      if (!b.inside(sums.window())) continue;
      const std::int64_t s = sums.box_sum(b);
      best = std::max(best, s < 0 ? -s : s);
    }
    out.phi.push_back(best);
  }
  return out;
}

}  // namespace circsq

#include "circsq/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "circsq/error.hpp"

namespace circsq {

Point make_point(std::initializer_list<std::int64_t> coords) {
  if (coords.size() > static_cast<std::size_t>(kMaxDim)) throw InvalidArgument("too many coordinates");
  Point p{};
  std::copy(coords.begin(), coords.end(), p.begin());
  return p;
}

std::int64_t linf_norm(const Point& p, int d) {
  std::int64_t m = 0;
  for (int i = 0; i < d; ++i) m = std::max(m, p[i] < 0 ? -p[i] : p[i]);
  return m;
}

std::string format_point(const Point& p, int d) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}

double reduce_mod1(double v) {
  double r = v - std::floor(v);
  // floor can leave exactly 1.0 for tiny negative inputs
  if (r >= 1.0) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(std::vector<double> coords) : coords_(std::move(coords)) {
  for (double& c : coords_) c = reduce_mod1(c);
}

// ---------------------------------------------------------------- shapes

ShapeSpec::ShapeSpec(Variant v) : shape_(std::move(v)) { validate(); }

ShapeSpec ShapeSpec::interval_union(std::vector<std::pair<double, double>> intervals) {
  return ShapeSpec(IntervalUnion{std::move(intervals)});
}

ShapeSpec ShapeSpec::disk(std::vector<double> center, double radius) {
  return ShapeSpec(Disk{std::move(center), radius});
}

ShapeSpec ShapeSpec::rect(std::vector<double> corner, std::vector<double> sides) {
  return ShapeSpec(Rect{std::move(corner), std::move(sides)});
}

std::size_t ShapeSpec::dim() const {
  struct {
    std::size_t operator()(const IntervalUnion&) const { return 1; }
    std::size_t operator()(const Disk& s) const { return s.center.size(); }
    std::size_t operator()(const Rect& s) const { return s.corner.size(); }
  } visitor;
  return std::visit(visitor, shape_);
}

bool ShapeSpec::has_exact_measure() const { return !std::holds_alternative<Disk>(shape_); }

void ShapeSpec::validate() const {
  if (const auto* iu = std::get_if<IntervalUnion>(&shape_)) {
    for (const auto& [a, b] : iu->intervals) {
      if (!(0.0 <= a && a < b && b <= 1.0)) throw InvalidArgument("interval endpoints must satisfy 0 <= a < b <= 1");
    }
    auto sorted = iu->intervals;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].first < sorted[i - 1].second) throw InvalidArgument("intervals overlap");
    }
  } else if (const auto* disk = std::get_if<Disk>(&shape_)) {
    if (disk->center.empty()) throw InvalidArgument("disk needs a center");
    if (!(disk->radius > 0.0)) throw InvalidArgument("disk radius must be positive");
    for (double c : disk->center) {
      if (c - disk->radius < 0.0 || c + disk->radius > 0.5) {
        throw InvalidArgument("disk must fit inside [0,1/2)^k");
      }
    }
  } else {
    const auto& rect = std::get<Rect>(shape_);
    if (rect.corner.empty() || rect.corner.size() != rect.sides.size()) {
      throw InvalidArgument("rectangle corner and sides must have the same positive length");
    }
    for (std::size_t i = 0; i < rect.corner.size(); ++i) {
      if (!(rect.sides[i] > 0.0)) throw InvalidArgument("rectangle sides must be positive");
      if (rect.corner[i] < 0.0 || rect.corner[i] + rect.sides[i] > 0.5) {
        throw InvalidArgument("rectangle must fit inside [0,1/2)^k");
      }
    }
  }
}

std::string ShapeSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (const auto* iu = std::get_if<IntervalUnion>(&shape_)) {
    os << "interval";
    for (const auto& [a, b] : iu->intervals) os << ' ' << a << ' ' << b;
  } else if (const auto* disk = std::get_if<Disk>(&shape_)) {
    os << "disk";
    for (double c : disk->center) os << ' ' << c;
    os << ' ' << disk->radius;
  } else {
    const auto& rect = std::get<Rect>(shape_);
    os << "rect";
    for (double c : rect.corner) os << ' ' << c;
    for (double s : rect.sides) os << ' ' << s;
  }
  return os.str();
}

bool ShapeSpec::contains(const TorusPoint& p) const {
  if (p.dim() != dim()) throw InvalidArgument("shape and point dimensions differ");
  if (const auto* iu = std::get_if<IntervalUnion>(&shape_)) {
    for (const auto& [a, b] : iu->intervals) {
      if (a <= p[0] && p[0] < b) return true;
    }
    return false;
  }
  if (const auto* disk = std::get_if<Disk>(&shape_)) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
      const double delta = p[i] - disk->center[i];
      r2 += delta * delta;
    }
    return r2 < disk->radius * disk->radius;
  }
  const auto& rect = std::get<Rect>(shape_);
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (!(rect.corner[i] <= p[i] && p[i] < rect.corner[i] + rect.sides[i])) return false;
  }
  return true;
}

double ShapeSpec::measure() const {
  if (const auto* iu = std::get_if<IntervalUnion>(&shape_)) {
    double total = 0.0;
    for (const auto& [a, b] : iu->intervals) total += b - a;
    return total;
  }
  if (const auto* disk = std::get_if<Disk>(&shape_)) {
    const auto k = static_cast<double>(disk->center.size());
    // volume of the k-ball
    return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0) * std::pow(disk->radius, k);
  }
  double vol = 1.0;
  for (double s : std::get<Rect>(shape_).sides) vol *= s;
  return vol;
}

bool shape_contains(const ShapeSpec& shape, const TorusPoint& p) { return shape.contains(p); }
double lambda_measure(const ShapeSpec& shape) { return shape.measure(); }

// ---------------------------------------------------------------- action

void ActionSpec::validate() const {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (d < 1 || d > kMaxDim) throw InvalidArgument("d must be in [1, " + std::to_string(kMaxDim) + "]");
  if (static_cast<int>(u.size()) != d) throw InvalidArgument("expected " + std::to_string(d) + " generator vectors");
  for (const auto& v : u) {
    if (static_cast<int>(v.size()) != k) throw InvalidArgument("generator vectors must have k components");
  }
  if (static_cast<int>(x0.dim()) != k) throw InvalidArgument("base point must have k components");
}

namespace {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  // rejection sampling; std distributions are not portable across libraries
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int n = 2; static_cast<int>(primes.size()) < count; ++n) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > n) break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(n);
  }
  return primes;
}

}  // namespace

std::vector<std::vector<double>> seeded_generators(int k, int d, std::uint64_t seed) {
  const int needed = k * d;
  if (needed > 64) throw InvalidArgument("k*d too large for seeded generators");
  auto primes = first_primes(64);
  std::mt19937_64 rng(seed);
  for (std::size_t i = primes.size() - 1; i > 0; --i) {
    std::swap(primes[i], primes[uniform_below(rng, i + 1)]);
  }
  std::vector<std::vector<double>> u(d, std::vector<double>(k));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < k; ++j) {
      const double root = std::sqrt(static_cast<double>(primes[i * k + j]));
      u[i][j] = root - std::floor(root);
    }
  }
  return u;
}

TorusPoint torus_point(std::span<const std::int64_t> gamma, const ActionSpec& action) {
  if (static_cast<int>(gamma.size()) != action.d) throw InvalidArgument("lattice vector has wrong dimension");
  std::vector<double> coords = action.x0.coords();
  if (static_cast<int>(coords.size()) != action.k) throw InvalidArgument("base point has wrong dimension");
  for (int j = 0; j < action.k; ++j) {
    double acc = coords[j];
    for (int i = 0; i < action.d; ++i) acc += static_cast<double>(gamma[i]) * action.u[i][j];
    coords[j] = acc;
  }
  return TorusPoint(std::move(coords));
}

TorusPoint torus_point(const Point& gamma, const ActionSpec& action) {
  return torus_point(std::span<const std::int64_t>(gamma.data(), action.d), action);
}

// ---------------------------------------------------------------- window

LatticeWindow::LatticeWindow(int d, std::int64_t side, std::int64_t margin) : d_(d), side_(side), margin_(margin) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("window dimension out of range");
  if (side < 1) throw InvalidArgument("window side must be positive");
  if (margin < 0 || 2 * margin >= side) throw InvalidArgument("need 0 <= 2*margin < L");
  size_ = 1;
  for (int i = d - 1; i >= 0; --i) {
    strides_[i] = size_;
    if (size_ > (std::int64_t{1} << 40) / side) throw InvalidArgument("window too large");
    size_ *= side;
  }
}

std::int64_t LatticeWindow::index(const Point& p) const {
  std::int64_t idx = 0;
  for (int i = 0; i < d_; ++i) idx += p[i] * strides_[i];
  return idx;
}

Point LatticeWindow::point(std::int64_t index) const {
  Point p{};
  for (int i = 0; i < d_; ++i) {
    p[i] = index / strides_[i];
    index %= strides_[i];
  }
  return p;
}

bool LatticeWindow::contains(const Point& p) const {
  for (int i = 0; i < d_; ++i) {
    if (p[i] < 0 || p[i] >= side_) return false;
  }
  return true;
}

bool LatticeWindow::in_core(const Point& p) const {
  for (int i = 0; i < d_; ++i) {
    if (p[i] < core_lo() || p[i] >= core_hi()) return false;
  }
  return true;
}

// ---------------------------------------------------------------- directions

DirectionTable::DirectionTable(int d) : d_(d) {
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  for (std::int64_t code = 0; code < total; ++code) {
    Point g{};
    std::int64_t c = code;
    for (int i = d - 1; i >= 0; --i) {
      g[i] = c % 3 - 1;
      c /= 3;
    }
    if (linf_norm(g, d) != 0) dirs_.push_back(g);
  }
}

const DirectionTable& DirectionTable::get(int d) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<DirectionTable>> cache;
  if (d < 1 || d > kMaxDim) throw InvalidArgument("direction table dimension out of range");
  std::lock_guard lock(mu);
  auto& slot = cache[d];
  if (!slot) slot.reset(new DirectionTable(d));
  return *slot;
}

int DirectionTable::find(const Point& g) const {
  std::int64_t code = 0;
  for (int i = 0; i < d_; ++i) {
    if (g[i] < -1 || g[i] > 1) return -1;
    code = code * 3 + (g[i] + 1);
  }
  const std::int64_t zero_code = (count() + 1) / 2;
  if (code == zero_code) return -1;
  return static_cast<int>(code < zero_code ? code : code - 1);
}

std::int64_t DirectionTable::offset(int i, const LatticeWindow& w) const { return w.index(dirs_[i]); }

// ---------------------------------------------------------------- fields

IndicatorField::IndicatorField(LatticeWindow window, std::vector<std::uint8_t> membership)
    : window_(window), membership_(std::move(membership)) {
  if (static_cast<std::int64_t>(membership_.size()) != window_.size()) {
    throw InvalidArgument("membership vector does not match window size");
  }
  for (auto m : membership_) {
    count_a_ += (m & kInA) ? 1 : 0;
    count_b_ += (m & kInB) ? 1 : 0;
  }
}

std::vector<int> IndicatorField::values() const {
  std::vector<int> out(membership_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(static_cast<std::int64_t>(i));
  return out;
}

IndicatorField field_from_values(const LatticeWindow& window, std::span<const int> values) {
  if (static_cast<std::int64_t>(values.size()) != window.size()) throw InvalidArgument("value count does not match window");
  std::vector<std::uint8_t> membership(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 1) {
      membership[i] = IndicatorField::kInA;
    } else if (values[i] == -1) {
      membership[i] = IndicatorField::kInB;
    } else if (values[i] != 0) {
      throw InvalidArgument("field values must be in {-1,0,1}");
    }
  }
  return IndicatorField(window, std::move(membership));
}

IndicatorField sample_field(const LatticeWindow& window, const ActionSpec& action, const ShapeSpec& A,
                            const ShapeSpec& B) {
  action.validate();
  if (window.d() != action.d) throw InvalidArgument("window and action dimensions differ");
  if (static_cast<int>(A.dim()) != action.k || static_cast<int>(B.dim()) != action.k) {
    throw InvalidArgument("shape dimension differs from torus dimension k");
  }
  const double tol = (A.has_exact_measure() && B.has_exact_measure()) ? 1e-12 : 1e-9;
  if (std::abs(A.measure() - B.measure()) > tol) {
    std::ostringstream os;
    os.precision(17);
    os << "measures differ: lambda(A)=" << A.measure() << " lambda(B)=" << B.measure();
    throw InvalidArgument(os.str());
  }
  std::vector<std::uint8_t> membership(window.size());
  for (std::int64_t i = 0; i < window.size(); ++i) {
    const TorusPoint p = torus_point(window.point(i), action);
    membership[i] = static_cast<std::uint8_t>((A.contains(p) ? IndicatorField::kInA : 0) |
                                              (B.contains(p) ? IndicatorField::kInB : 0));
  }
  return IndicatorField(window, std::move(membership));
}

void check_free_action(const LatticeWindow& window, const ActionSpec& action, double tolerance) {
  struct Entry {
    std::vector<double> c;
    std::int64_t index;
  };
  std::vector<Entry> pts;
  pts.reserve(window.size());
  for (std::int64_t i = 0; i < window.size(); ++i) {
    auto c = torus_point(window.point(i), action).coords();
    if (c[0] > 1.0 - tolerance) {
      auto wrapped = c;
      wrapped[0] -= 1.0;
      pts.push_back({std::move(wrapped), i});
    }
    pts.push_back({std::move(c), i});
  }
  std::sort(pts.begin(), pts.end(), [](const Entry& a, const Entry& b) { return a.c[0] < b.c[0]; });
  auto torus_gap = [](double a, double b) {
    const double g = std::abs(a - b);
    return std::min(g, 1.0 - g);
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size() && pts[j].c[0] - pts[i].c[0] < tolerance; ++j) {
      if (pts[i].index == pts[j].index) continue;
      bool close = true;
      for (std::size_t t = 1; t < pts[i].c.size() && close; ++t) close = torus_gap(pts[i].c[t], pts[j].c[t]) < tolerance;
      if (close) {
        throw InvalidArgument("action is not free on the window: " + format_point(window.point(pts[i].index), window.d()) +
                              " and " + format_point(window.point(pts[j].index), window.d()) + " collide");
      }
    }
  }
}

}  // namespace circsq

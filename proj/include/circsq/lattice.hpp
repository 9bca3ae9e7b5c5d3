#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace circsq {

inline constexpr int kMaxDim = 8;

// Lattice vector; only the first d entries are meaningful, the rest stay 0.
using Point = std::array<std::int64_t, kMaxDim>;

Point make_point(std::initializer_list<std::int64_t> coords);
std::int64_t linf_norm(const Point& p, int d);
std::string format_point(const Point& p, int d);

double reduce_mod1(double v);

// Point of T^k stored as coordinates in [0,1).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(std::vector<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

struct IntervalUnion {
  std::vector<std::pair<double, double>> intervals;  // half-open [a,b)
};

struct Disk {
  std::vector<double> center;
  double radius = 0.0;
};

struct Rect {
  std::vector<double> corner;
  std::vector<double> sides;
};

class ShapeSpec {
 public:
  using Variant = std::variant<IntervalUnion, Disk, Rect>;

  ShapeSpec() = default;
  explicit ShapeSpec(Variant v);

  static ShapeSpec interval_union(std::vector<std::pair<double, double>> intervals);
  static ShapeSpec disk(std::vector<double> center, double radius);
  static ShapeSpec rect(std::vector<double> corner, std::vector<double> sides);

  const Variant& variant() const { return shape_; }
  std::size_t dim() const;
  // Disks carry an irrational measure; everything else is exact.
  bool has_exact_measure() const;
  std::string describe() const;

  bool contains(const TorusPoint& p) const;
  double measure() const;

 private:
  void validate() const;
  Variant shape_;
};

bool shape_contains(const ShapeSpec& shape, const TorusPoint& p);
double lambda_measure(const ShapeSpec& shape);

struct ActionSpec {
  int k = 1;
  int d = 3;
  std::vector<std::vector<double>> u;  // d vectors of length k
  TorusPoint x0;
  std::uint64_t seed = 0;

  void validate() const;
};

// seeded generator: u components are fractional parts of square roots of distinct primes
std::vector<std::vector<double>> seeded_generators(int k, int d, std::uint64_t seed);

TorusPoint torus_point(std::span<const std::int64_t> gamma, const ActionSpec& action);
TorusPoint torus_point(const Point& gamma, const ActionSpec& action);

class LatticeWindow {
 public:
  LatticeWindow(int d, std::int64_t side, std::int64_t margin);

  int d() const { return d_; }
  std::int64_t side() const { return side_; }
  std::int64_t margin() const { return margin_; }
  std::int64_t size() const { return size_; }
  std::int64_t stride(int axis) const { return strides_[axis]; }
  std::int64_t core_lo() const { return margin_; }
  std::int64_t core_hi() const { return side_ - margin_; }
  std::int64_t core_side() const { return side_ - 2 * margin_; }

  // Row-major with axis 0 slowest, so index order is lexicographic order.
  std::int64_t index(const Point& p) const;
  Point point(std::int64_t index) const;
  bool contains(const Point& p) const;
  bool in_core(const Point& p) const;
  bool in_core(std::int64_t index) const { return in_core(point(index)); }

 private:
  int d_;
  std::int64_t side_;
  std::int64_t margin_;
  std::int64_t size_;
  std::array<std::int64_t, kMaxDim> strides_{};
};

// All gamma with |gamma|_inf = 1, in lexicographic order. Index i and
// count-1-i are negatives of each other, and the upper half are exactly the
// lexicographically positive directions.
class DirectionTable {
 public:
  static const DirectionTable& get(int d);

  int d() const { return d_; }
  int count() const { return static_cast<int>(dirs_.size()); }
  int positive_count() const { return count() / 2; }
  const Point& dir(int i) const { return dirs_[i]; }
  int negation(int i) const { return count() - 1 - i; }
  bool is_positive(int i) const { return i >= positive_count(); }
  // direction index of the s-th positive direction
  int positive_dir(int s) const { return positive_count() + s; }
  int slot(int i) const { return i - positive_count(); }
  int find(const Point& g) const;
  // index offset of the direction inside a window
  std::int64_t offset(int i, const LatticeWindow& w) const;

 private:
  explicit DirectionTable(int d);
  int d_;
  std::vector<Point> dirs_;
};

class IndicatorField {
 public:
  IndicatorField(LatticeWindow window, std::vector<std::uint8_t> membership);

  static constexpr std::uint8_t kInA = 1;
  static constexpr std::uint8_t kInB = 2;

  const LatticeWindow& window() const { return window_; }
  int value(std::int64_t index) const {
    const auto m = membership_[index];
    return static_cast<int>(m & kInA) - static_cast<int>((m & kInB) >> 1);
  }
  int value(const Point& p) const { return value(window_.index(p)); }
  bool in_A(std::int64_t index) const { return membership_[index] & kInA; }
  bool in_B(std::int64_t index) const { return membership_[index] & kInB; }
  std::int64_t count_A() const { return count_a_; }
  std::int64_t count_B() const { return count_b_; }
  std::vector<int> values() const;
  const std::vector<std::uint8_t>& membership() const { return membership_; }

 private:
  LatticeWindow window_;
  std::vector<std::uint8_t> membership_;
  std::int64_t count_a_ = 0;
  std::int64_t count_b_ = 0;
};

// Field with prescribed values in {-1,0,1}; used for synthetic inputs.
IndicatorField field_from_values(const LatticeWindow& window, std::span<const int> values);

IndicatorField sample_field(const LatticeWindow& window, const ActionSpec& action,
                            const ShapeSpec& A, const ShapeSpec& B);

// Throws InvalidArgument when two window points land within `tolerance`
// (sup-norm on the torus) of each other.
void check_free_action(const LatticeWindow& window, const ActionSpec& action, double tolerance);

}  // namespace circsq

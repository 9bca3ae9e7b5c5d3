#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "circsq/error.hpp"
#include "circsq/lattice.hpp"

namespace circsq {

// Antisymmetric function on the edges of a LatticeWindow.
//
// One slot per unordered edge {v, v+g} with g lexicographically positive;
// the slot holds the value on the oriented edge (v, v+g). Only edges whose
// lower vertex lies in the storage box [lo, hi) are representable, which
// lets callers keep just the part of the window they work on.
template <class T>
class EdgeField {
 public:
  explicit EdgeField(const LatticeWindow& window) : window_(window), dirs_(&DirectionTable::get(window.d())) {
    for (int i = 0; i < window.d(); ++i) {
      lo_[i] = 0;
      hi_[i] = window.side();
    }
    allocate();
  }

  EdgeField(const LatticeWindow& window, const Point& lo, const Point& hi)
      : window_(window), dirs_(&DirectionTable::get(window.d())), lo_(lo), hi_(hi) {
    for (int i = 0; i < window.d(); ++i) {
      lo_[i] = std::max<std::int64_t>(lo_[i], 0);
      hi_[i] = std::min<std::int64_t>(hi_[i], window.side());
      if (lo_[i] >= hi_[i]) throw InvalidArgument("empty edge storage box");
    }
    allocate();
  }

  const LatticeWindow& window() const { return window_; }
  const DirectionTable& directions() const { return *dirs_; }
  const Point& box_lo() const { return lo_; }
  const Point& box_hi() const { return hi_; }

  // Both endpoints in the window and the lower one in the storage box.
  bool has_edge(const Point& v, int dir) const {
    Point lower = v;
    if (!dirs_->is_positive(dir)) lower = add(v, dirs_->dir(dir));
    const Point upper = add(lower, dirs_->dir(positive_of(dir)));
    return in_box(lower) && window_.contains(upper);
  }

  // Value on the oriented edge (v, v+dir).
  T get(const Point& v, int dir) const {
    if (dirs_->is_positive(dir)) return values_[slot_index(v, dirs_->slot(dir))];
    const Point lower = add(v, dirs_->dir(dir));
    return -values_[slot_index(lower, dirs_->slot(dirs_->negation(dir)))];
  }

  void set(const Point& v, int dir, const T& value) {
    if (dirs_->is_positive(dir)) {
      values_[slot_index(v, dirs_->slot(dir))] = value;
    } else {
      values_[slot_index(add(v, dirs_->dir(dir)), dirs_->slot(dirs_->negation(dir)))] = -value;
    }
  }

  void add_to(const Point& v, int dir, const T& delta) {
    if (dirs_->is_positive(dir)) {
      values_[slot_index(v, dirs_->slot(dir))] += delta;
    } else {
      values_[slot_index(add(v, dirs_->dir(dir)), dirs_->slot(dirs_->negation(dir)))] -= delta;
    }
  }

  // Direct slot access by lower vertex and positive-direction slot.
  T& at(const Point& lower, int slot) { return values_[slot_index(lower, slot)]; }
  const T& at(const Point& lower, int slot) const { return values_[slot_index(lower, slot)]; }

  // fn(lower, slot, value&) for every representable edge
  template <class Fn>
  void for_each_edge(Fn&& fn) {
    visit(fn, *this);
  }
  template <class Fn>
  void for_each_edge(Fn&& fn) const {
    visit(fn, *this);
  }

  std::int64_t stored_vertices() const { return box_size_; }

 private:
  static Point add(const Point& a, const Point& b) {
    Point r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
    return r;
  }

  int positive_of(int dir) const { return dirs_->is_positive(dir) ? dir : dirs_->negation(dir); }

  bool in_box(const Point& p) const {
    for (int i = 0; i < window_.d(); ++i) {
      if (p[i] < lo_[i] || p[i] >= hi_[i]) return false;
    }
    return true;
  }

  std::size_t slot_index(const Point& lower, int slot) const {
    std::int64_t idx = 0;
    for (int i = 0; i < window_.d(); ++i) {
      if (lower[i] < lo_[i] || lower[i] >= hi_[i]) {
        throw InvalidArgument("edge at " + format_point(lower, window_.d()) + " outside the stored box");
      }
      idx += (lower[i] - lo_[i]) * strides_[i];
    }
    return static_cast<std::size_t>(idx * dirs_->positive_count() + slot);
  }

  void allocate() {
    box_size_ = 1;
    for (int i = window_.d() - 1; i >= 0; --i) {
      strides_[i] = box_size_;
      box_size_ *= hi_[i] - lo_[i];
    }
    values_.assign(static_cast<std::size_t>(box_size_ * dirs_->positive_count()), T{});
  }

  template <class Fn, class Self>
  static void visit(Fn& fn, Self& self) {
    const int d = self.window_.d();
    const int P = self.dirs_->positive_count();
    Point p = self.lo_;
    for (std::int64_t b = 0; b < self.box_size_; ++b) {
      std::int64_t rem = b;
      for (int i = 0; i < d; ++i) {
        p[i] = self.lo_[i] + rem / self.strides_[i];
        rem %= self.strides_[i];
      }
      for (int s = 0; s < P; ++s) {
        const Point q = add(p, self.dirs_->dir(self.dirs_->positive_dir(s)));
        if (!self.window_.contains(q)) continue;
        fn(static_cast<const Point&>(p), s, self.values_[static_cast<std::size_t>(b * P + s)]);
      }
    }
  }

  LatticeWindow window_;
  const DirectionTable* dirs_;
  Point lo_{};
  Point hi_{};
  std::array<std::int64_t, kMaxDim> strides_{};
  std::int64_t box_size_ = 0;
  std::vector<T> values_;
};

// sum over all neighbours of the value on (y, y+g); every edge must be stored
template <class T>
T divergence(const EdgeField<T>& field, const Point& y) {
  const auto& dirs = field.directions();
  if (!field.window().contains(y)) throw InvalidArgument("divergence at a vertex outside the window");
  T total{};
  for (int i = 0; i < dirs.count(); ++i) {
    if (!field.has_edge(y, i)) {
      throw InvalidArgument("divergence needs every edge at " + format_point(y, field.window().d()));
    }
    total += field.get(y, i);
  }
  return total;
}

}  // namespace circsq

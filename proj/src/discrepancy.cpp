#include "circsq/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "circsq/error.hpp"

namespace circsq {

double discrepancy(std::span<const TorusPoint> points, const ShapeSpec& shape) {
  if (points.empty()) throw InvalidArgument("discrepancy of an empty set");
  std::int64_t hits = 0;
  for (const auto& p : points) hits += shape.contains(p) ? 1 : 0;
  const double frac = static_cast<double>(hits) / static_cast<double>(points.size());
  return std::abs(frac - shape.measure());
}

double box_discrepancy(const ActionSpec& action, const ShapeSpec& shape, std::int64_t N, const TorusPoint& x) {
  if (N < 1) throw InvalidArgument("box side must be positive");
  const int d = action.d;
  const int k = action.k;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= N;
  std::int64_t hits = 0;
  Point gamma{};
  std::vector<double> coords(k);
  for (std::int64_t t = 0; t < total; ++t) {
    std::int64_t rem = t;
    for (int i = d - 1; i >= 0; --i) {
      gamma[i] = rem % N;
      rem /= N;
    }
    for (int j = 0; j < k; ++j) {
      double acc = x[j];
      for (int i = 0; i < d; ++i) acc += static_cast<double>(gamma[i]) * action.u[i][j];
      coords[j] = acc;
    }
    hits += shape.contains(TorusPoint(coords)) ? 1 : 0;
  }
  return std::abs(static_cast<double>(hits) / static_cast<double>(total) - shape.measure());
}

DiscrepancyFit fit_discrepancy_envelope(const ActionSpec& action, const ShapeSpec& shape,
                                        std::span<const std::int64_t> Ns, std::span<const TorusPoint> xs) {
  action.validate();
  if (xs.empty()) throw InvalidArgument("need at least one base point");
  std::set<std::int64_t> distinct(Ns.begin(), Ns.end());
  if (distinct.size() < 3) throw InvalidArgument("need at least 3 distinct N for the fit");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 2) throw InvalidArgument("every N must be at least 2");
    if (i > 0 && Ns[i] <= Ns[i - 1]) throw InvalidArgument("N values must be increasing");
  }

  DiscrepancyFit fit;
  for (std::int64_t N : Ns) {
    DiscrepancyRow row;
    row.N = N;
    for (const auto& x : xs) {
      const double D = box_discrepancy(action, shape, N, x);
      row.per_point.push_back(D);
      row.max_D = std::max(row.max_D, D);
    }
    fit.table.push_back(std::move(row));
  }

  for (const auto& row : fit.table) {
    if (row.max_D == 0.0) {
      fit.degenerate = true;
      fit.flag = "degenerate: zero discrepancy";
      fit.slope = fit.intercept = fit.epsilon = fit.M = fit.M_envelope = std::nan("");
      return fit;
    }
  }

  // least squares of log max_D on log N
  const double n = static_cast<double>(fit.table.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : fit.table) {
    const double lx = std::log(static_cast<double>(row.N));
    const double ly = std::log(row.max_D);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.epsilon = -1.0 - fit.slope;
  fit.M = std::exp(fit.intercept);
  for (const auto& row : fit.table) {
    fit.M_envelope = std::max(fit.M_envelope, row.max_D * std::pow(static_cast<double>(row.N), 1.0 + fit.epsilon));
  }
  if (fit.slope > kNoDecaySlope) {
    fit.no_decay = true;
    fit.flag = "no decay";
  }
  return fit;
}

int choose_lattice_dimension(int k, double boundary_dim) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (!(boundary_dim < k)) throw InvalidArgument("boundary dimension must be below k");
  if (boundary_dim < 0) throw InvalidArgument("boundary dimension must be non-negative");
  const double threshold = 2.0 * k / (k - boundary_dim);
  int d = static_cast<int>(std::floor(threshold)) + 1;
  return std::max(d, 2);
}

std::vector<TorusPoint> fit_base_points(const ActionSpec& action, int count) {
  std::vector<TorusPoint> xs;
  if (count <= 0) return xs;
  xs.push_back(action.x0);
  std::mt19937_64 rng(action.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = 1; i < count; ++i) {
    std::vector<double> c(action.k);
    // 53 random bits -> [0,1)
    for (double& v : c) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    xs.emplace_back(std::move(c));
  }
  return xs;
}

}  // namespace circsq

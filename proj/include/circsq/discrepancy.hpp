#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "circsq/lattice.hpp"

namespace circsq {

// | |F ∩ A| / |F| - lambda(A) |
double discrepancy(std::span<const TorusPoint> points, const ShapeSpec& shape);

// Discrepancy of the N^d orbit box {x + sum gamma_i u_i : 0 <= gamma_i < N}.
double box_discrepancy(const ActionSpec& action, const ShapeSpec& shape, std::int64_t N, const TorusPoint& x);

struct DiscrepancyRow {
  std::int64_t N = 0;
  double max_D = 0.0;
  std::vector<double> per_point;  // one entry per base point
};

struct DiscrepancyFit {
  std::vector<DiscrepancyRow> table;
  bool degenerate = false;  // some max_D was exactly zero, no log-log fit possible
  bool no_decay = false;    // fitted slope above kNoDecaySlope
  double slope = 0.0;
  double intercept = 0.0;
  double epsilon = 0.0;     // slope = -1 - epsilon
  double M = 0.0;           // exp(intercept)
  double M_envelope = 0.0;  // smallest M with max_D <= M N^{-1-epsilon} on the table
  std::string flag;         // "", "degenerate: zero discrepancy" or "no decay"
};

inline constexpr double kNoDecaySlope = -0.25;

DiscrepancyFit fit_discrepancy_envelope(const ActionSpec& action, const ShapeSpec& shape,
                                        std::span<const std::int64_t> Ns, std::span<const TorusPoint> xs);

// Smallest d >= 2 with d > 2k / (k - boundary_dim).
int choose_lattice_dimension(int k, double boundary_dim);

// Random base points for the fit, deterministic in the seed. The first point is x0.
std::vector<TorusPoint> fit_base_points(const ActionSpec& action, int count);

}  // namespace circsq

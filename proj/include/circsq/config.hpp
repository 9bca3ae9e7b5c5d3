#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "circsq/integralize.hpp"
#include "circsq/lattice.hpp"

namespace circsq {

// Everything a run needs. Text form: one "key = value" per line, '#' starts
// a comment. Numbers accept fractions, pi and sqrt(), e.g. "sqrt(1/8)".
struct RunConfig {
  int k = 1;
  int d = 3;
  std::int64_t L = 32;
  std::int64_t margin = -1;  // -1: 2^N0
  int N0 = 3;
  std::uint64_t seed = 1;
  std::vector<double> x0;               // empty: origin
  std::vector<std::vector<double>> u;   // empty: seeded generators
  std::string A = "interval 0 1/4";
  std::string B = "interval 1/2 3/4";
  IntegralizeMode mode = IntegralizeMode::Direct;
  std::string tiling = "rect";
  std::int64_t K = 0;  // 0: choose automatically
  int cover_n = 3;
  int cover_levels = -1;  // -1: as many as fit
  std::vector<std::int64_t> fit_ns;  // empty: powers of two up to a size cap
  int fit_points = 8;
  std::string out_dir = "out";
  int raster_res = 256;
  double collision_tol = 1e-12;

  std::int64_t effective_margin() const { return margin >= 0 ? margin : (std::int64_t{1} << N0); }
  std::vector<std::int64_t> effective_fit_ns() const;
  ActionSpec action() const;
  LatticeWindow window() const;
  ShapeSpec shape_A() const;
  ShapeSpec shape_B() const;

  // Throws ConfigError with the offending key.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  // key -> canonical value text, in key order
  std::map<std::string, std::string> to_map() const;
};

const std::vector<std::string>& config_keys();

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

double parse_number(const std::string& text);
ShapeSpec parse_shape(const std::string& text, int k);

}  // namespace circsq

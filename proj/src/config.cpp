#include "circsq/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "circsq/error.hpp"

namespace circsq {
namespace {

// expr := term (('+'|'-') term)*; term := factor (('*'|'/') factor)*;
// factor := ['-'] (number | 'pi' | 'sqrt' '(' expr ')' | '(' expr ')')
class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : s_(text) {}

  double parse() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw ConfigError("bad number \"" + s_ + "\": " + why); }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool eat_word(const char* w) {
    skip();
    const std::string word(w);
    if (s_.compare(pos_, word.size(), word) == 0) {
      pos_ += word.size();
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) {
        v += term();
      } else if (eat('-')) {
        v -= term();
      } else {
        return v;
      }
    }
  }
  double term() {
    double v = factor();
    for (;;) {
      if (eat('*')) {
        v *= factor();
      } else if (eat('/')) {
        const double den = factor();
        if (den == 0.0) fail("division by zero");
        v /= den;
      } else {
        return v;
      }
    }
  }
  double factor() {
    if (eat('-')) return -factor();
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (eat_word("pi")) return std::numbers::pi;
    if (eat_word("sqrt")) {
      if (!eat('(')) fail("sqrt needs '('");
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      if (v < 0) fail("sqrt of a negative number");
      return std::sqrt(v);
    }
    skip();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> tokens(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : tokens(s, ",")) out.push_back(parse_number(t));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::int64_t to_integer(const std::string& key, const std::string& value) {
  const double v = parse_number(value);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
  return static_cast<std::int64_t>(v);
}

}  // namespace

double parse_number(const std::string& text) { return ExprParser(text).parse(); }

ShapeSpec parse_shape(const std::string& text, int k) {
  const auto parts = tokens(text, ",");
  if (parts.empty()) throw ConfigError("empty shape");
  const std::string& kind = parts[0];
  std::vector<double> v;
  for (std::size_t i = 1; i < parts.size(); ++i) v.push_back(parse_number(parts[i]));
  try {
    if (kind == "empty") {
      if (k != 1 || !v.empty()) throw ConfigError("the empty shape is an interval union and needs k = 1");
      return ShapeSpec::interval_union({});
    }
    if (kind == "interval") {
      if (k != 1) throw ConfigError("interval shapes need k = 1");
      if (v.empty() || v.size() % 2) throw ConfigError("interval needs pairs of endpoints");
      std::vector<std::pair<double, double>> iv;
      for (std::size_t i = 0; i < v.size(); i += 2) iv.emplace_back(v[i], v[i + 1]);
      return ShapeSpec::interval_union(std::move(iv));
    }
    if (kind == "disk" || kind == "disk_area") {
      if (static_cast<int>(v.size()) != k + 1) throw ConfigError(kind + " needs k centre coordinates and one size");
      const double size = v.back();
      v.pop_back();
      const double radius = kind == "disk" ? size : std::sqrt(size / std::numbers::pi);
      if (kind == "disk_area" && k != 2) throw ConfigError("disk_area is only defined for k = 2");
      return ShapeSpec::disk(std::move(v), radius);
    }
    if (kind == "rect") {
      if (static_cast<int>(v.size()) != 2 * k) throw ConfigError("rect needs k corner coordinates and k sides");
      std::vector<double> corner(v.begin(), v.begin() + k), sides(v.begin() + k, v.end());
      return ShapeSpec::rect(std::move(corner), std::move(sides));
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError("shape \"" + text + "\": " + e.what());
  }
  throw ConfigError("unknown shape kind \"" + kind + "\" (interval, disk, disk_area, rect, empty)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"k",       "d",          "L",           "margin",   "N0",
                                             "seed",    "x0",         "u",           "A",        "B",
                                             "mode",    "tiling",     "K",           "cover_n",  "cover_levels",
                                             "fit_ns",  "fit_points", "out_dir",     "raster_res", "collision_tol"};
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto integer = [&] { return to_integer(key, value); };
  if (key == "k") {
    k = static_cast<int>(integer());
  } else if (key == "d") {
    d = static_cast<int>(integer());
  } else if (key == "L") {
    L = integer();
  } else if (key == "margin") {
    margin = value == "auto" ? -1 : integer();
  } else if (key == "N0") {
    N0 = static_cast<int>(integer());
  } else if (key == "seed") {
    const auto s = integer();
    if (s < 0) throw ConfigError("seed must be non-negative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "x0") {
    x0 = value == "origin" ? std::vector<double>{} : numbers(value);
  } else if (key == "u") {
    u.clear();
    if (value != "seeded") {
      std::stringstream ss(value);
      std::string vec;
      while (std::getline(ss, vec, ';')) {
        if (!trim(vec).empty()) u.push_back(numbers(vec));
      }
    }
  } else if (key == "A") {
    A = value;
  } else if (key == "B") {
    B = value;
  } else if (key == "mode") {
    if (value == "direct") {
      mode = IntegralizeMode::Direct;
    } else if (value == "cover") {
      mode = IntegralizeMode::Cover;
    } else {
      throw ConfigError("mode must be direct or cover");
    }
  } else if (key == "tiling") {
    if (value != "rect" && value != "voronoi") throw ConfigError("tiling must be rect or voronoi");
    tiling = value;
  } else if (key == "K") {
    K = value == "auto" ? 0 : integer();
  } else if (key == "cover_n") {
    cover_n = static_cast<int>(integer());
  } else if (key == "cover_levels") {
    cover_levels = value == "auto" ? -1 : static_cast<int>(integer());
  } else if (key == "fit_ns") {
    fit_ns.clear();
    if (value != "auto") {
      for (const auto& t : tokens(value, ",")) fit_ns.push_back(to_integer(key, t));
    }
  } else if (key == "fit_points") {
    fit_points = static_cast<int>(integer());
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "raster_res") {
    raster_res = static_cast<int>(integer());
  } else if (key == "collision_tol") {
    collision_tol = parse_number(value);
  } else {
    throw ConfigError("unknown key \"" + key + "\"");
  }
}

std::vector<std::int64_t> RunConfig::effective_fit_ns() const {
  if (!fit_ns.empty()) return fit_ns;
  // powers of two while a single orbit box stays below ~2^21 points
  std::vector<std::int64_t> ns;
  for (std::int64_t N = 2; N <= 64; N *= 2) {
    double size = 1;
    for (int i = 0; i < d; ++i) size *= static_cast<double>(N);
    if (size > 2.1e6) break;
    ns.push_back(N);
  }
  return ns;
}

ActionSpec RunConfig::action() const {
  ActionSpec a;
  a.k = k;
  a.d = d;
  a.seed = seed;
  a.u = u.empty() ? seeded_generators(k, d, seed) : u;
  a.x0 = TorusPoint(x0.empty() ? std::vector<double>(static_cast<std::size_t>(k), 0.0) : x0);
  return a;
}

LatticeWindow RunConfig::window() const { return LatticeWindow(d, L, effective_margin()); }
ShapeSpec RunConfig::shape_A() const { return parse_shape(A, k); }
ShapeSpec RunConfig::shape_B() const { return parse_shape(B, k); }

void RunConfig::validate() const {
  if (k < 1 || k > 8) throw ConfigError("k must be in [1, 8]");
  if (d < 1 || d > kMaxDim) throw ConfigError("d must be in [1, " + std::to_string(kMaxDim) + "]");
  if (N0 < 1 || N0 > 12) throw ConfigError("N0 must be in [1, 12]");
  if (L < 4) throw ConfigError("L must be at least 4");
  const auto m = effective_margin();
  if (m < 1 || 2 * m >= L) throw ConfigError("margin must satisfy 1 <= margin < L/2 (got " + std::to_string(m) + ")");
  if (!x0.empty() && static_cast<int>(x0.size()) != k) throw ConfigError("x0 needs k = " + std::to_string(k) + " coordinates");
  if (!u.empty()) {
    if (static_cast<int>(u.size()) != d) throw ConfigError("u needs d = " + std::to_string(d) + " vectors");
    for (const auto& v : u) {
      if (static_cast<int>(v.size()) != k) throw ConfigError("each u vector needs k = " + std::to_string(k) + " entries");
    }
  } else if (k * d > 64) {
    throw ConfigError("seeded generators support k*d <= 64");
  }
  const auto sa = shape_A();
  const auto sb = shape_B();
  // disks have irrational area; everything else should agree to rounding
  const double tol = sa.has_exact_measure() && sb.has_exact_measure() ? 1e-15 : 1e-9;
  if (std::abs(sa.measure() - sb.measure()) > tol) {
    throw ConfigError("A and B must have equal measure (" + fmt(sa.measure()) + " vs " + fmt(sb.measure()) + ")");
  }
  if (K < 0) throw ConfigError("K must be non-negative");
  if (cover_n < 1) throw ConfigError("cover_n must be at least 1");
  if (cover_levels < -1 || cover_levels > 6) throw ConfigError("cover_levels must be auto or in [0, 6]");
  const auto ns = effective_fit_ns();
  if (ns.size() < 3) throw ConfigError("fit_ns needs at least three sizes");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 2 || (i && ns[i] <= ns[i - 1])) throw ConfigError("fit_ns must be increasing and at least 2");
  }
  if (fit_points < 1) throw ConfigError("fit_points must be positive");
  if (raster_res < 8 || raster_res > 4096) throw ConfigError("raster_res must be in [8, 4096]");
  if (!(collision_tol >= 0)) throw ConfigError("collision_tol must be non-negative");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["k"] = std::to_string(k);
  m["d"] = std::to_string(d);
  m["L"] = std::to_string(L);
  m["margin"] = std::to_string(effective_margin());
  m["N0"] = std::to_string(N0);
  m["seed"] = std::to_string(seed);
  m["x0"] = x0.empty() ? "origin" : join(x0);
  if (u.empty()) {
    m["u"] = "seeded";
  } else {
    std::string s;
    for (std::size_t i = 0; i < u.size(); ++i) s += (i ? "; " : "") + join(u[i]);
    m["u"] = s;
  }
  m["A"] = A;
  m["B"] = B;
  m["mode"] = mode == IntegralizeMode::Direct ? "direct" : "cover";
  m["tiling"] = tiling;
  m["K"] = K ? std::to_string(K) : "auto";
  m["cover_n"] = std::to_string(cover_n);
  m["cover_levels"] = cover_levels < 0 ? "auto" : std::to_string(cover_levels);
  std::string ns;
  for (auto n : effective_fit_ns()) ns += (ns.empty() ? "" : ",") + std::to_string(n);
  m["fit_ns"] = ns;
  m["fit_points"] = std::to_string(fit_points);
  m["out_dir"] = out_dir;
  m["raster_res"] = std::to_string(raster_res);
  m["collision_tol"] = fmt(collision_tol);
  return m;
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& [key, value] : config.to_map()) out << key << " = " << value << '\n';
}

}  // namespace circsq

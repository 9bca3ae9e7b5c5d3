#include "circsq/io.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace circsq {
namespace {

template <class T>
void put(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("edge field file is truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_int(const std::string& s, std::size_t row, const std::string& column) {
  std::int64_t v = 0;
  std::size_t used = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) {
    throw FormatError("row " + std::to_string(row) + ", column " + column + ": \"" + s + "\" is not an integer");
  }
  return v;
}

std::string header(int d) {
  std::string h;
  for (int i = 0; i < d; ++i) h += "x" + std::to_string(i) + ",";
  for (int i = 0; i < d; ++i) h += "g" + std::to_string(i) + ",";
  return h + "piece";
}

template <class T>
void edge_csv(std::ostream& out, const EdgeField<T>& field, auto&& render) {
  const int d = field.window().d();
  for (int i = 0; i < d; ++i) out << 'x' << i << ',';
  out << "dir,value\r\n";
  const auto& dirs = field.directions();
  field.for_each_edge([&](const Point& p, int slot, const T& v) {
    for (int i = 0; i < d; ++i) out << p[i] << ',';
    out << dirs.positive_dir(slot) << ',' << render(v) << "\r\n";
  });
}

// distinct, stable colours for piece ids
void colour(int id, unsigned char rgb[3]) {
  std::uint32_t h = static_cast<std::uint32_t>(id) * 2654435761u;
  h ^= h >> 15;
  h *= 2246822519u;
  h ^= h >> 13;
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<unsigned char>(40 + ((h >> (8 * c)) & 0xff) * 180 / 255);
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_pieces_csv(std::ostream& out, const LatticeWindow& window, const PieceMap& pieces) {
  const int d = window.d();
  out << header(d) << "\r\n";
  for (const auto& as : pieces.assignments) {
    const Point p = window.point(as.source);
    for (int i = 0; i < d; ++i) out << p[i] << ',';
    for (int i = 0; i < d; ++i) out << as.gamma[i] << ',';
    out << as.piece << "\r\n";
  }
}

PieceMap read_pieces_csv(std::istream& in, const LatticeWindow& window, std::int64_t K, std::int64_t bound) {
  const int d = window.d();
  PieceMap pm;
  pm.d = d;
  pm.K = K;
  pm.bound = bound;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("piece file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header(d)) throw FormatError("unexpected piece file header \"" + line + "\", expected \"" + header(d) + "\"");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const bool had_cr = !line.empty() && line.back() == '\r';
    if (had_cr) line.pop_back();
    if (!had_cr && in.eof()) throw FormatError("row " + std::to_string(row) + " is not terminated (truncated file?)");
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 2 * d + 1) {
      throw FormatError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(2 * d + 1));
    }
    Point p{};
    Assignment as;
    for (int i = 0; i < d; ++i) p[i] = parse_int(cells[i], row, "x" + std::to_string(i));
    for (int i = 0; i < d; ++i) as.gamma[i] = parse_int(cells[d + i], row, "g" + std::to_string(i));
    as.piece = static_cast<int>(parse_int(cells[2 * d], row, "piece"));
    as.source = window.contains(p) ? window.index(p) : -1;
    pm.assignments.push_back(as);
    pm.gammas.push_back(as.gamma);
  }
  std::sort(pm.gammas.begin(), pm.gammas.end());
  pm.gammas.erase(std::unique(pm.gammas.begin(), pm.gammas.end()), pm.gammas.end());
  return pm;
}

void write_edge_field_csv(std::ostream& out, const EdgeField<Dyadic>& field) {
  edge_csv(out, field, [](const Dyadic& v) { return v.to_string(); });
}

void write_edge_field_csv(std::ostream& out, const EdgeField<std::int64_t>& field) {
  edge_csv(out, field, [](std::int64_t v) { return std::to_string(v); });
}

void write_edge_field_binary(std::ostream& out, const EdgeField<Dyadic>& field) {
  const auto& w = field.window();
  const auto& dirs = field.directions();
  std::vector<std::tuple<std::int64_t, std::int32_t, std::int64_t, std::uint32_t>> rows;
  field.for_each_edge([&](const Point& p, int slot, const Dyadic& v) {
    if (v.is_zero()) return;
    if (!v.is_small()) throw InvalidArgument("edge value too large for the binary format");
    rows.emplace_back(w.index(p), dirs.positive_dir(slot), v.small_numerator(), v.exponent());
  });
  out.write("CSQF", 4);
  put<std::int32_t>(out, w.d());
  put<std::int64_t>(out, w.side());
  put<std::int64_t>(out, w.margin());
  for (int i = 0; i < w.d(); ++i) put<std::int64_t>(out, field.box_lo()[i]);
  for (int i = 0; i < w.d(); ++i) put<std::int64_t>(out, field.box_hi()[i]);
  put<std::int64_t>(out, static_cast<std::int64_t>(rows.size()));
  for (const auto& [idx, dir, num, exp] : rows) {
    put(out, idx);
    put(out, dir);
    put(out, num);
    put(out, exp);
  }
}

EdgeField<Dyadic> read_edge_field_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CSQF", 4) != 0) throw FormatError("not an edge field file");
  const int d = get<std::int32_t>(in);
  if (d < 1 || d > kMaxDim) throw FormatError("bad dimension in edge field file");
  const auto L = get<std::int64_t>(in);
  const auto margin = get<std::int64_t>(in);
  Point lo{}, hi{};
  for (int i = 0; i < d; ++i) lo[i] = get<std::int64_t>(in);
  for (int i = 0; i < d; ++i) hi[i] = get<std::int64_t>(in);
  const LatticeWindow w(d, L, margin);
  EdgeField<Dyadic> field(w, lo, hi);
  const auto& dirs = field.directions();
  const auto count = get<std::int64_t>(in);
  for (std::int64_t r = 0; r < count; ++r) {
    const auto idx = get<std::int64_t>(in);
    const auto dir = get<std::int32_t>(in);
    const auto num = get<std::int64_t>(in);
    const auto exp = get<std::uint32_t>(in);
    if (idx < 0 || idx >= w.size() || dir < 0 || dir >= dirs.count() || !dirs.is_positive(dir)) {
      throw FormatError("bad edge record " + std::to_string(r));
    }
    field.at(w.point(idx), dirs.slot(dir)) = Dyadic(num, exp);
  }
  return field;
}

void write_piece_raster(std::ostream& out, const LatticeWindow& window, const ActionSpec& action,
                        const IndicatorField& field, const PieceMap& pieces, int resolution) {
  if (action.k != 2) throw InvalidArgument("rasters are only drawn for k = 2");
  const int W = 2 * resolution + 8;
  const int H = resolution;
  std::vector<unsigned char> img(static_cast<std::size_t>(W) * H * 3, 255);
  std::vector<int> source_piece(static_cast<std::size_t>(window.size()), -1);
  std::vector<int> target_piece(static_cast<std::size_t>(window.size()), -1);
  for (const auto& as : pieces.assignments) {
    source_piece[as.source] = as.piece;
    Point q = window.point(as.source);
    for (int i = 0; i < window.d(); ++i) q[i] += as.gamma[i];
    if (window.contains(q)) target_piece[window.index(q)] = as.piece;
  }
  auto paint = [&](int panel, const TorusPoint& x, int piece) {
    const int px = std::min(resolution - 1, static_cast<int>(x[0] * resolution));
    const int py = std::min(resolution - 1, static_cast<int>(x[1] * resolution));
    unsigned char rgb[3] = {150, 150, 150};
    if (piece >= 0) colour(piece, rgb);
    const std::size_t at = (static_cast<std::size_t>(H - 1 - py) * W + panel * (resolution + 8) + px) * 3;
    std::copy(rgb, rgb + 3, img.begin() + static_cast<std::ptrdiff_t>(at));
  };
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (!window.in_core(idx)) continue;
    const bool a = field.in_A(idx), b = field.in_B(idx);
    if (!a && !b) continue;
    const TorusPoint x = torus_point(window.point(idx), action);
    if (a) paint(0, x, source_piece[idx]);
    if (b) paint(1, x, target_piece[idx]);
  }
  for (int y = 0; y < H; ++y) {
    for (int x = resolution; x < resolution + 8; ++x) {
      const std::size_t at = (static_cast<std::size_t>(y) * W + x) * 3;
      img[at] = img[at + 1] = img[at + 2] = 0;
    }
  }
  out << "P3\n" << W << ' ' << H << "\n255\n";
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t at = (static_cast<std::size_t>(y) * W + x) * 3;
      out << static_cast<int>(img[at]) << ' ' << static_cast<int>(img[at + 1]) << ' ' << static_cast<int>(img[at + 2])
          << (x + 1 == W ? '\n' : ' ');
    }
  }
}

}  // namespace circsq

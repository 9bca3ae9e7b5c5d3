#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "circsq/config.hpp"
#include "circsq/error.hpp"
#include "circsq/io.hpp"

using namespace circsq;

TEST_CASE("number expressions") {
  CHECK(parse_number("1/4") == doctest::Approx(0.25));
  CHECK(parse_number("sqrt(1/8)") == doctest::Approx(std::sqrt(0.125)));
  CHECK(parse_number("-2*(3+1)") == doctest::Approx(-8.0));
  CHECK(parse_number("1/(2*sqrt(pi))") == doctest::Approx(1.0 / (2.0 * std::sqrt(std::numbers::pi))));
  CHECK(parse_number("1e-3") == doctest::Approx(0.001));
  CHECK_THROWS_AS(parse_number("1/"), ConfigError);
  CHECK_THROWS_AS(parse_number("foo"), ConfigError);
  CHECK_THROWS_AS(parse_number("(1"), ConfigError);
}

TEST_CASE("shape strings") {
  CHECK(parse_shape("interval 0 1/4", 1).measure() == doctest::Approx(0.25));
  CHECK(parse_shape("interval 0 1/8, 1/2 5/8", 1).measure() == doctest::Approx(0.25));
  CHECK(parse_shape("disk 1/4 1/4 1/5", 2).measure() == doctest::Approx(std::numbers::pi / 25));
  CHECK(parse_shape("disk_area 1/4 1/4 1/8", 2).measure() == doctest::Approx(0.125));
  CHECK(parse_shape("rect 0 0 sqrt(1/8) sqrt(1/8)", 2).measure() == doctest::Approx(0.125));
  CHECK(parse_shape("empty", 1).measure() == 0.0);
  CHECK_THROWS_AS(parse_shape("interval 0 1/4", 2), ConfigError);
  CHECK_THROWS_AS(parse_shape("disk 0.4 0.4 0.3", 2), ConfigError);
  CHECK_THROWS_AS(parse_shape("blob 1", 1), ConfigError);
}

TEST_CASE("config files") {
  std::istringstream in(
      "# flagship\n"
      "k = 1\n"
      "d = 3   # lattice dimension\n"
      "L = 24\n"
      "A = interval 0 1/4\n"
      "B = interval 1/2 3/4\n"
      "u = 0.414; 0.732; 0.236\n"
      "mode = cover\n");
  const auto cfg = parse_config(in);
  CHECK(cfg.L == 24);
  CHECK(cfg.mode == IntegralizeMode::Cover);
  REQUIRE(cfg.u.size() == 3);
  CHECK(cfg.u[1][0] == doctest::Approx(0.732));
  CHECK_NOTHROW(cfg.validate());

  // round trip through the text form
  std::ostringstream out;
  write_config(out, cfg);
  std::istringstream back(out.str());
  CHECK(parse_config(back).to_map() == cfg.to_map());

  SUBCASE("errors name the line") {
    std::istringstream bad("k = 1\nwidth = 3\n");
    try {
      parse_config(bad, "run.cfg");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
    }
    std::istringstream noeq("k 1\n");
    CHECK_THROWS_AS(parse_config(noeq), ConfigError);
  }
  SUBCASE("validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.B = "interval 1/2 5/8";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.margin = 16;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.u = {{0.1}, {0.2}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.set("K", "-3");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    CHECK_THROWS_AS(c.set("mode", "sideways"), ConfigError);
    CHECK_THROWS_AS(c.set("L", "12.5"), ConfigError);
  }
  SUBCASE("disk against square uses the loose tolerance") {
    RunConfig c;
    c.k = 2;
    c.d = 5;
    c.L = 10;
    c.N0 = 1;
    c.margin = 2;
    c.A = "disk_area 1/4 1/4 1/8";
    c.B = "rect 0 0 sqrt(1/8) sqrt(1/8)";
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.effective_margin() == 8);
  const auto ns = c.effective_fit_ns();
  CHECK(ns.front() == 2);
  CHECK(ns.back() == 64);
  CHECK(c.window().side() == 32);
  CHECK(c.action().u.size() == 3);
}

namespace {

PieceMap sample_pieces(const LatticeWindow& w) {
  PieceMap pm;
  pm.d = w.d();
  pm.K = 2;
  pm.bound = 8;
  pm.gammas = {make_point({-1, 0}), make_point({0, 1})};
  pm.assignments = {{w.index(make_point({2, 3})), make_point({0, 1}), 1},
                    {w.index(make_point({4, 4})), make_point({-1, 0}), 0}};
  return pm;
}

}  // namespace

TEST_CASE("piece CSV round trip") {
  const LatticeWindow w(2, 8, 1);
  const auto pm = sample_pieces(w);
  std::ostringstream out;
  write_pieces_csv(out, w, pm);
  CHECK(out.str() == "x0,x1,g0,g1,piece\r\n2,3,0,1,1\r\n4,4,-1,0,0\r\n");
  std::istringstream in(out.str());
  const auto back = read_pieces_csv(in, w, 2, 8);
  REQUIRE(back.assignments.size() == 2);
  CHECK(back.gammas == pm.gammas);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.assignments[i].source == pm.assignments[i].source);
    CHECK(back.assignments[i].gamma == pm.assignments[i].gamma);
    CHECK(back.assignments[i].piece == pm.assignments[i].piece);
  }

  SUBCASE("schema errors name the row") {
    auto expect_error = [&](const std::string& text, const std::string& needle) {
      std::istringstream bad(text);
      try {
        read_pieces_csv(bad, w, 2, 8);
        FAIL("expected a format error");
      } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
      }
    };
    expect_error("", "empty");
    expect_error("x,y\r\n", "header");
    expect_error("x0,x1,g0,g1,piece\r\n2,3,0,1\r\n", "row 1");
    expect_error("x0,x1,g0,g1,piece\r\n2,3,0,1,1\r\n4,4,-1,zero,0\r\n", "row 2");
    expect_error("x0,x1,g0,g1,piece\r\n2,3,0,1,1\r\n4,4,-1,0", "row 2");
  }
}

TEST_CASE("edge field dumps") {
  const LatticeWindow w(2, 4, 1);
  EdgeField<Dyadic> f(w);
  const auto& dirs = DirectionTable::get(2);
  f.set(make_point({1, 1}), dirs.find(make_point({0, 1})), Dyadic(3, 2));
  f.set(make_point({2, 2}), dirs.find(make_point({-1, -1})), Dyadic(-5));

  std::stringstream bin;
  write_edge_field_binary(bin, f);
  const auto back = read_edge_field_binary(bin);
  f.for_each_edge([&](const Point& p, int s, const Dyadic& v) { CHECK(back.at(p, s) == v); });

  std::string bytes = bin.str();
  bytes[0] = 'X';
  std::istringstream corrupt(bytes);
  CHECK_THROWS_AS(read_edge_field_binary(corrupt), FormatError);
  std::istringstream cut(bin.str().substr(0, 30));
  CHECK_THROWS_AS(read_edge_field_binary(cut), FormatError);

  std::ostringstream csv;
  write_edge_field_csv(csv, f);
  CHECK(csv.str().rfind("x0,x1,dir,value\r\n", 0) == 0);
  CHECK(csv.str().find("1,1,4,3/2^2\r\n") != std::string::npos);
  CHECK(csv.str().find("1,1,7,5/2^0\r\n") != std::string::npos);
}

TEST_CASE("raster output") {
  const LatticeWindow w(2, 8, 1);
  ActionSpec a;
  a.k = 2;
  a.d = 2;
  a.u = {{0.37, 0.11}, {0.13, 0.71}};
  a.x0 = TorusPoint({0.0, 0.0});
  const auto f = sample_field(w, a, ShapeSpec::rect({0, 0}, {0.25, 0.5}), ShapeSpec::rect({0.25, 0}, {0.25, 0.5}));
  std::ostringstream out;
  write_piece_raster(out, w, a, f, PieceMap{2, 1, 6, {}, {}}, 16);
  std::istringstream in(out.str());
  std::string magic;
  int W = 0, H = 0, maxv = 0;
  in >> magic >> W >> H >> maxv;
  CHECK(magic == "P3");
  CHECK(W == 40);
  CHECK(H == 16);
  CHECK(maxv == 255);
  std::size_t count = 0;
  for (int v; in >> v;) ++count;
  CHECK(count == static_cast<std::size_t>(W) * H * 3);

  ActionSpec a1;
  a1.k = 1;
  CHECK_THROWS_AS(write_piece_raster(out, w, a1, f, PieceMap{}, 16), InvalidArgument);
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

#include "circsq/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "circsq/error.hpp"
#include "circsq/finite_flow.hpp"
#include "circsq/io.hpp"

namespace circsq {
namespace {

template <class Fn>
auto stage(const char* name, std::ostream* log, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto result = fn();
    if (log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      *log << "[" << name << "] " << dt.count() << " s\n";
    }
    return result;
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(name);
    throw;
  }
}

Point plus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

Tiling make_tiling(const RunConfig& cfg, const LatticeWindow& window, std::int64_t K) {
  if (cfg.tiling == "voronoi") return voronoi_tiling(window, greedy_net(window, K, core_region(window)));
  return rect_tiling(window, K);
}

struct Trial {
  std::int64_t K = 0;
  Tiling tiling;
  Matching matching;
  PieceMap pieces;
  VerifyReport report;
  std::int64_t bound = 0;
  std::int64_t reach = 0;

  bool clean() const { return report.ok() && matching.interior_excluded == 0; }
};

Trial try_K(const RunConfig& cfg, const Sampled& s, const EdgeField<std::int64_t>& flow, std::int64_t K,
            std::ostream* log) {
  Trial t;
  t.K = K;
  t.tiling = stage("tiles", log, [&] { return make_tiling(cfg, s.window, K); });
  const auto tf = stage("tile_flow", log, [&] { return tile_flow(flow, t.tiling, s.field); });
  t.matching = stage("matching", log, [&] { return build_matching(tf, t.tiling, s.field); });
  t.bound = gamma_bound(s.window, t.tiling);
  t.reach = frontier_reach(s.window, t.tiling);
  t.pieces = stage("pieces", log, [&] { return extract_pieces(s.window, t.matching, K, t.bound); });
  t.report = stage("verify", log, [&] { return verify_equidecomposition(t.pieces, s.field, t.reach); });
  if (log) {
    *log << "  K=" << K << " tiles=" << t.tiling.tiles.size() << " matched=" << t.report.matched
         << " unmatched=" << t.report.unmatched_A + t.report.unmatched_B
         << " interior_excluded=" << t.matching.interior_excluded << (t.clean() ? " ok" : "") << '\n';
  }
  return t;
}

void write_file(const std::filesystem::path& path, auto&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  writer(out);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const InfeasibleError*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const VerificationError*>(&e)) return kExitVerify;
  return kExitOther;
}

Sampled sample_stage(const RunConfig& cfg) {
  cfg.validate();
  auto action = cfg.action();
  action.validate();
  const LatticeWindow window = cfg.window();
  auto A = cfg.shape_A();
  auto B = cfg.shape_B();
  check_free_action(window, action, cfg.collision_tol);
  auto field = sample_field(window, action, A, B);
  return Sampled{std::move(action), window, std::move(A), std::move(B), std::move(field)};
}

BoundsInfo discrepancy_stage(const RunConfig& cfg, const Sampled& s) {
  BoundsInfo b;
  const auto xs = fit_base_points(s.action, cfg.fit_points);
  const auto ns = cfg.effective_fit_ns();
  b.fit_A = fit_discrepancy_envelope(s.action, s.A, ns, xs);
  b.fit_B = fit_discrepancy_envelope(s.action, s.B, ns, xs);
  if (!b.fit_A.flag.empty() || !b.fit_B.flag.empty()) {
    b.note = "fit unusable (A: " + (b.fit_A.flag.empty() ? "ok" : b.fit_A.flag) +
             ", B: " + (b.fit_B.flag.empty() ? "ok" : b.fit_B.flag) + ")";
    return b;
  }
  b.epsilon = std::min(b.fit_A.epsilon, b.fit_B.epsilon);
  if (!(b.epsilon > 0)) {
    b.note = "fitted decay exponent is not above 1, no tail bound";
    return b;
  }
  // one M for both shapes at the shared exponent, enveloping every measured row
  for (const auto* fit : {&b.fit_A, &b.fit_B}) {
    for (const auto& row : fit->table) {
      b.M = std::max(b.M, row.max_D * std::pow(static_cast<double>(row.N), 1.0 + b.epsilon));
    }
  }
  b.tail = tail_bound(cfg.N0, b.M, b.epsilon, s.window.d());
  b.flow = flow_bound(b.M, b.epsilon, s.window.d());
  b.usable = true;
  return b;
}

FlowStage flow_stage(const RunConfig& cfg, const Sampled& s, const WorkingGraph& wg, const BoundsInfo& bounds) {
  const auto& w = s.window;
  const BoxPrefixSums sums(s.field);
  Point lo{}, hi{};
  wg.storage_box(lo, hi);
  auto psi = truncated_psi(sums, cfg.N0, lo, hi);
  auto cube = measure_cube_sums(sums, cfg.N0);
  const Dyadic dev_bound = cube.deviation_bound(cfg.N0);

  const auto& dirs = DirectionTable::get(w.d());
  Dyadic max_err;
  std::int64_t invalid = 0;
  for (int v = 0; v < wg.core_vertex_count(); ++v) {
    const Point p = w.point(wg.window_index(v));
    bool all_valid = true;
    for (int i = 0; i < dirs.count(); ++i) {
      const Point q = plus(p, dirs.dir(i));
      const bool valid = dirs.is_positive(i) ? psi_edge_valid(w, cfg.N0, p, q) : psi_edge_valid(w, cfg.N0, q, p);
      if (!valid) {
        all_valid = false;
        if (dirs.is_positive(i) || !w.in_core(q)) ++invalid;
      }
    }
    if (!all_valid) continue;
    const Dyadic err = (Dyadic(s.field.value(p)) - divergence(psi, p)).abs();
    if (err > max_err) max_err = err;
  }

  std::optional<std::int64_t> unit;
  if (bounds.usable) unit = static_cast<std::int64_t>(std::ceil(bounds.tail)) + 1;
  auto repaired = repair_flow(wg, psi, s.field, unit);
  Dyadic max_abs;
  const auto values = wg.gather(repaired);
  for (int e = 0; e < wg.real_edge_count(); ++e) {
    const Dyadic a = values[e].abs();
    if (a > max_abs) max_abs = a;
  }
  return FlowStage{std::move(psi), std::move(repaired), std::move(cube), max_err, dev_bound, invalid, unit, max_abs};
}

nlohmann::json fit_to_json(const DiscrepancyFit& fit) {
  nlohmann::json j;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j["slope"] = num(fit.slope);
  j["intercept"] = num(fit.intercept);
  j["epsilon"] = num(fit.epsilon);
  j["M"] = num(fit.M);
  j["M_envelope"] = num(fit.M_envelope);
  j["flag"] = fit.flag;
  j["table"] = nlohmann::json::array();
  for (const auto& row : fit.table) j["table"].push_back({{"N", row.N}, {"max_D", row.max_D}});
  return j;
}

nlohmann::json report_to_json(const VerifyReport& r) {
  return {{"pieces_disjoint", r.pieces_disjoint},
          {"images_disjoint", r.images_disjoint},
          {"sources_in_A", r.sources_in_A},
          {"images_in_B", r.images_in_B},
          {"injective", r.injective},
          {"counts_ok", r.counts_ok},
          {"bound_ok", r.bound_ok},
          {"pieces_consistent", r.pieces_consistent},
          {"locality_ok", r.locality_ok},
          {"matched", r.matched},
          {"core_A", r.core_A},
          {"core_B", r.core_B},
          {"unmatched_A", r.unmatched_A},
          {"unmatched_B", r.unmatched_B},
          {"unmatched_fraction", r.unmatched_fraction()},
          {"ok", r.ok()},
          {"problems", r.problems}};
}

SquareRun run_square(const RunConfig& cfg, std::ostream* log) {
  try {
    cfg.validate();
  } catch (Error& e) {
    e.set_stage("config");
    throw;
  }
  const Sampled s = stage("sample", log, [&] { return sample_stage(cfg); });
  const auto& w = s.window;
  const BoundsInfo bounds = stage("discrepancy", log, [&] { return discrepancy_stage(cfg, s); });
  const WorkingGraph wg = stage("graph", log, [&] { return WorkingGraph(w); });
  const FlowStage fs = stage("psi", log, [&] { return flow_stage(cfg, s, wg, bounds); });

  int levels = cfg.cover_levels;
  if (cfg.mode == IntegralizeMode::Cover && levels < 0) levels = max_cover_levels(w, cfg.cover_n);
  const auto integral = stage("integralize", log, [&] {
    if (cfg.mode == IntegralizeMode::Cover && levels < 0) throw InvalidArgument("window too small for any cover level");
    return integralize_flow(wg, fs.repaired, s.field, cfg.mode, cfg.cover_n, std::max(levels, 0));
  });

  const double c = bounds.usable ? bounds.flow : fs.max_abs_repaired.to_double();
  const std::int64_t c_int = integral_flow_bound(c, w.d());
  const auto certified = stage("select_K", log, [&] { return certified_K(w, s.field, c_int); });

  std::string K_mode;
  std::vector<std::int64_t> candidates;
  if (cfg.K > 0) {
    K_mode = "fixed";
    candidates = {cfg.K};
  } else if (certified) {
    K_mode = "certified";
    candidates = {*certified};
  } else {
    K_mode = "realized";
    for (std::int64_t K = 1; K <= std::max<std::int64_t>(1, w.core_side() / 4); ++K) candidates.push_back(K);
  }
  std::optional<Trial> chosen;
  for (auto K : candidates) {
    Trial t = try_K(cfg, s, integral.flow, K, log);
    const bool better = !chosen || (!chosen->clean() && (t.clean() || (t.report.map_ok() && !chosen->report.map_ok()) ||
                                                         (t.report.map_ok() == chosen->report.map_ok() &&
                                                          t.report.unmatched_fraction() < chosen->report.unmatched_fraction())));
    if (better) chosen = std::move(t);
    if (chosen->clean()) break;
  }

  SquareRun run;
  run.pieces = chosen->pieces;
  run.report = chosen->report;

  nlohmann::json& j = run.summary;
  j["config"] = cfg.to_map();
  j["window"] = {{"d", w.d()}, {"L", w.side()}, {"margin", w.margin()}, {"core_side", w.core_side()}};
  j["counts"] = {{"A", s.field.count_A()}, {"B", s.field.count_B()}, {"core_A", run.report.core_A},
                 {"core_B", run.report.core_B}};
  j["discrepancy"] = {{"A", fit_to_json(bounds.fit_A)}, {"B", fit_to_json(bounds.fit_B)},
                      {"usable", bounds.usable}, {"note", bounds.note}};
  if (bounds.usable) {
    j["bounds"] = {{"epsilon", bounds.epsilon}, {"M", bounds.M}, {"tail_bound", bounds.tail}, {"flow_bound", bounds.flow}};
  } else {
    j["bounds"] = {{"epsilon", nullptr}, {"M", nullptr}, {"tail_bound", nullptr}, {"flow_bound", nullptr}};
  }
  j["N0"] = cfg.N0;
  j["flow"] = {{"cube_sums", fs.cube.phi},
               {"deviation_bound", fs.deviation_bound.to_string()},
               {"max_core_error", fs.max_core_error.to_string()},
               {"invalid_core_edges", fs.invalid_core_edges},
               {"repair_capacity", fs.repair_unit ? nlohmann::json(*fs.repair_unit) : nlohmann::json("unbounded")},
               {"max_abs_repaired", fs.max_abs_repaired.to_string()},
               {"note", "divergence enforced on the core only; residuals routed to the layer outside it"}};
  j["integralize"] = {{"mode", cfg.mode == IntegralizeMode::Direct ? "direct" : "cover"},
                      {"max_deviation", integral.max_deviation.to_string()},
                      {"regions", integral.regions},
                      {"components", integral.components},
                      {"coverage", integral.coverage}};
  j["c"] = c;
  j["c_source"] = bounds.usable ? "fit" : "measured";
  j["c_int"] = c_int;
  j["K"] = chosen->K;
  j["K_mode"] = K_mode;
  j["K_certified"] = certified ? nlohmann::json(*certified) : nlohmann::json(nullptr);
  j["tiling"] = {{"kind", cfg.tiling}, {"tiles", chosen->tiling.tiles.size()}, {"irregular", chosen->tiling.irregular}};
  j["gamma_bound"] = chosen->bound;
  j["frontier_reach"] = chosen->reach;
  std::size_t used = 0;
  for (bool u : chosen->matching.used) used += u;
  j["matching"] = {{"used_tiles", used}, {"demoted", chosen->matching.demoted},
                   {"interior_excluded", chosen->matching.interior_excluded}};
  j["pieces"] = run.pieces.gammas.size();
  j["verify"] = report_to_json(run.report);

  stage("output", log, [&] {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "pieces.csv", [&](std::ostream& o) { write_pieces_csv(o, w, run.pieces); });
    write_file(dir / "summary.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    if (s.action.k == 2) {
      write_file(dir / "raster.ppm", [&](std::ostream& o) {
        write_piece_raster(o, w, s.action, s.field, run.pieces, cfg.raster_res);
      });
    }
    return 0;
  });
  return run;
}

VerifyReport run_verify(const RunConfig& cfg, const std::string& pieces_path, const std::string& summary_path) {
  const Sampled s = stage("sample", nullptr, [&] { return sample_stage(cfg); });
  return stage("verify", nullptr, [&] {
    std::ifstream sj(summary_path);
    if (!sj) throw Error("cannot open " + summary_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(sj);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(summary_path + ": " + e.what());
    }
    auto field = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_number_integer()) throw FormatError(summary_path + ": missing integer \"" + key + "\"");
      return j[key].get<std::int64_t>();
    };
    const auto& win = j.value("window", nlohmann::json::object());
    if (win.value("d", -1) != s.window.d() || win.value("L", std::int64_t{-1}) != s.window.side() ||
        win.value("margin", std::int64_t{-1}) != s.window.margin()) {
      throw FormatError("summary window does not match the config");
    }
    const auto K = field("K");
    const auto bound = field("gamma_bound");
    const auto reach = field("frontier_reach");
    std::ifstream pin(pieces_path, std::ios::binary);
    if (!pin) throw Error("cannot open " + pieces_path);
    const PieceMap pm = read_pieces_csv(pin, s.window, K, bound);
    const auto expected = j.value("verify", nlohmann::json::object()).value("matched", std::int64_t{-1});
    if (expected >= 0 && expected != static_cast<std::int64_t>(pm.assignments.size())) {
      throw FormatError("piece file has " + std::to_string(pm.assignments.size()) + " rows, summary says " +
                        std::to_string(expected));
    }
    return verify_equidecomposition(pm, s.field, reach);
  });
}

}  // namespace circsq

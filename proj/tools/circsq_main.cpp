// Command-line front end: discrepancy | flow | integralize | square | verify.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "circsq/config.hpp"
#include "circsq/error.hpp"
#include "circsq/finite_flow.hpp"
#include "circsq/integralize.hpp"
#include "circsq/io.hpp"
#include "circsq/pipeline.hpp"

namespace fs = std::filesystem;
using namespace circsq;

namespace {

struct Common {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "key = value config file");
  sub->add_option("--set", c.sets, "override as key=value (repeatable)");
  sub->add_flag("-q,--quiet", c.quiet, "no stage timings on stderr");
  for (const auto& key : config_keys()) {
    sub->add_option_function<std::string>(
        "--" + key, [&c, key](const std::string& v) { c.overrides[key] = v; }, "override config key " + key);
  }
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : c.overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw Error("cannot write " + p.string());
}

int cmd_discrepancy(const RunConfig& cfg) {
  auto action = cfg.action();
  action.validate();
  const auto xs = fit_base_points(action, cfg.fit_points);
  const auto ns = cfg.effective_fit_ns();
  const auto fitA = fit_discrepancy_envelope(action, cfg.shape_A(), ns, xs);
  const auto fitB = fit_discrepancy_envelope(action, cfg.shape_B(), ns, xs);
  fs::create_directories(cfg.out_dir);
  std::string csv = "N,max_D_A,max_D_B\r\n";
  for (std::size_t i = 0; i < fitA.table.size(); ++i) {
    std::ostringstream row;
    row.precision(17);
    row << fitA.table[i].N << ',' << fitA.table[i].max_D << ',' << fitB.table[i].max_D << "\r\n";
    csv += row.str();
  }
  write_text(fs::path(cfg.out_dir) / "discrepancy.csv", csv);
  const nlohmann::json j{{"A", fit_to_json(fitA)}, {"B", fit_to_json(fitB)}};
  write_text(fs::path(cfg.out_dir) / "discrepancy.json", j.dump(2) + "\n");
  std::cout << "N        max_D(A)       max_D(B)\n";
  for (std::size_t i = 0; i < fitA.table.size(); ++i) {
    std::printf("%-8lld %-14.6e %-14.6e\n", static_cast<long long>(fitA.table[i].N), fitA.table[i].max_D,
                fitB.table[i].max_D);
  }
  for (const auto& [name, fit] : {std::pair{"A", &fitA}, std::pair{"B", &fitB}}) {
    std::cout << name << ": slope " << fit->slope << ", eps " << fit->epsilon << ", M " << fit->M
              << (fit->flag.empty() ? "" : " [" + fit->flag + "]") << '\n';
  }
  return kExitOk;
}

int cmd_flow(const RunConfig& cfg, bool integral, std::ostream* log) {
  const Sampled s = sample_stage(cfg);
  const BoundsInfo bounds = discrepancy_stage(cfg, s);
  const WorkingGraph wg(s.window);
  const FlowStage fl = flow_stage(cfg, s, wg, bounds);
  if (log) *log << "[flow] max |f - div psi| = " << fl.max_core_error.to_string() << " (bound "
                << fl.deviation_bound.to_string() << ")\n";
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  nlohmann::json j{{"max_core_error", fl.max_core_error.to_string()},
                   {"deviation_bound", fl.deviation_bound.to_string()},
                   {"within_bound", fl.max_core_error <= fl.deviation_bound},
                   {"cube_sums", fl.cube.phi},
                   {"psi_bound", fl.cube.psi_bound(cfg.N0).to_string()},
                   {"repair_capacity", fl.repair_unit ? nlohmann::json(*fl.repair_unit) : nlohmann::json("unbounded")},
                   {"max_abs_repaired", fl.max_abs_repaired.to_string()},
                   {"fit_usable", bounds.usable}};
  if (!integral) {
    std::ofstream csv(dir / "flow.csv", std::ios::binary);
    write_edge_field_csv(csv, fl.repaired);
    std::ofstream bin(dir / "flow.bin", std::ios::binary);
    write_edge_field_binary(bin, fl.repaired);
    write_text(dir / "flow.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }
  int levels = cfg.cover_levels;
  if (cfg.mode == IntegralizeMode::Cover && levels < 0) levels = max_cover_levels(s.window, cfg.cover_n);
  if (cfg.mode == IntegralizeMode::Cover && levels < 0) throw InvalidArgument("window too small for any cover level");
  const auto res = integralize_flow(wg, fl.repaired, s.field, cfg.mode, cfg.cover_n, std::max(levels, 0));
  j["mode"] = cfg.mode == IntegralizeMode::Direct ? "direct" : "cover";
  j["max_deviation"] = res.max_deviation.to_string();
  j["regions"] = res.regions;
  j["components"] = res.components;
  j["coverage"] = res.coverage;
  std::ofstream csv(dir / "integral_flow.csv", std::ios::binary);
  write_edge_field_csv(csv, res.flow);
  write_text(dir / "integralize.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_square(const RunConfig& cfg, std::ostream* log) {
  const auto run = run_square(cfg, log);
  const auto& j = run.summary;
  std::cout << "K = " << j["K"] << " (" << j["K_mode"].get<std::string>() << "), pieces = " << j["pieces"]
            << ", matched = " << run.report.matched << ", unmatched fraction = " << run.report.unmatched_fraction()
            << '\n';
  std::cout << "verify: " << (run.report.ok() ? "pass" : "FAIL") << '\n';
  for (const auto& p : run.report.problems) std::cout << "  " << p << '\n';
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "summary.json").string() << '\n';
  return run.report.ok() ? kExitOk : kExitVerify;
}

int cmd_verify(const RunConfig& cfg, std::string pieces, std::string summary) {
  if (pieces.empty()) pieces = (fs::path(cfg.out_dir) / "pieces.csv").string();
  if (summary.empty()) summary = (fs::path(cfg.out_dir) / "summary.json").string();
  const auto r = run_verify(cfg, pieces, summary);
  std::cout << report_to_json(r).dump(2) << '\n';
  std::cout << "verify: " << (r.ok() ? "pass" : "FAIL") << '\n';
  return r.ok() ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice flows, integral rounding and translation piece maps between two torus sets"};
  app.require_subcommand(1);
  Common disc, flow, integ, square, verify;
  auto* s_disc = app.add_subcommand("discrepancy", "fit the discrepancy decay of A and B");
  auto* s_flow = app.add_subcommand("flow", "build and repair the dyadic flow");
  auto* s_int = app.add_subcommand("integralize", "build the flow and round it to an integral one");
  auto* s_sq = app.add_subcommand("square", "full pipeline: flow, rounding, tiles, matching, pieces");
  auto* s_ver = app.add_subcommand("verify", "recheck written pieces against the config");
  add_common(s_disc, disc);
  add_common(s_flow, flow);
  add_common(s_int, integ);
  add_common(s_sq, square);
  add_common(s_ver, verify);
  std::string pieces_path, summary_path;
  s_ver->add_option("--pieces", pieces_path, "piece CSV (default out_dir/pieces.csv)");
  s_ver->add_option("--summary", summary_path, "summary JSON (default out_dir/summary.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*s_disc) return cmd_discrepancy(resolve(disc));
    if (*s_flow) return cmd_flow(resolve(flow), false, flow.quiet ? nullptr : &std::cerr);
    if (*s_int) return cmd_flow(resolve(integ), true, integ.quiet ? nullptr : &std::cerr);
    if (*s_sq) return cmd_square(resolve(square), square.quiet ? nullptr : &std::cerr);
    if (*s_ver) return cmd_verify(resolve(verify), pieces_path, summary_path);
  } catch (const Error& e) {
    std::cerr << "error" << (e.stage().empty() ? "" : " [" + e.stage() + "]") << ": " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "circsq/config.hpp"
#include "circsq/discrepancy.hpp"
#include "circsq/dyadic.hpp"
#include "circsq/edge_field.hpp"
#include "circsq/equidecompose.hpp"
#include "circsq/flow_construct.hpp"
#include "circsq/integralize.hpp"
#include "circsq/lattice.hpp"
#include "circsq/tiling.hpp"

namespace circsq {

// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitVerify = 2,
  kExitInfeasible = 3,
  kExitConfig = 4,
};

// Maps an exception thrown by a stage to the exit code.
int exit_code_for(const std::exception& e);

struct Sampled {
  ActionSpec action;
  LatticeWindow window;
  ShapeSpec A;
  ShapeSpec B;
  IndicatorField field;
};

Sampled sample_stage(const RunConfig& cfg);

// Shared (M, eps) for A and B, with the derived tail and flow bounds when
// the fit shows decay.
struct BoundsInfo {
  DiscrepancyFit fit_A;
  DiscrepancyFit fit_B;
  bool usable = false;
  std::string note;
  double epsilon = 0.0;
  double M = 0.0;
  double tail = 0.0;  // tail_bound(N0, M, eps, d)
  double flow = 0.0;  // flow_bound(M, eps, d)
};

BoundsInfo discrepancy_stage(const RunConfig& cfg, const Sampled& s);

struct FlowStage {
  EdgeField<Dyadic> psi;       // truncated construction
  EdgeField<Dyadic> repaired;  // exact f-flow on the core
  CubeSumBounds cube;
  Dyadic max_core_error;             // max |f - div psi| over core vertices
  Dyadic deviation_bound;            // cube-sum bound for that error
  std::int64_t invalid_core_edges = 0;  // core-incident edges psi leaves at 0
  std::optional<std::int64_t> repair_unit;
  Dyadic max_abs_repaired;
};

FlowStage flow_stage(const RunConfig& cfg, const Sampled& s, const WorkingGraph& wg, const BoundsInfo& bounds);

struct SquareRun {
  nlohmann::json summary;
  PieceMap pieces;
  VerifyReport report;
};

// Runs every stage, writes pieces.csv, summary.json and (k = 2) raster.ppm
// into cfg.out_dir. Errors carry the failing stage's name.
SquareRun run_square(const RunConfig& cfg, std::ostream* log);

// Independent check of files written by run_square, using only the config,
// the piece CSV and the numbers in the summary.
VerifyReport run_verify(const RunConfig& cfg, const std::string& pieces_path, const std::string& summary_path);

nlohmann::json fit_to_json(const DiscrepancyFit& fit);
nlohmann::json report_to_json(const VerifyReport& r);

}  // namespace circsq

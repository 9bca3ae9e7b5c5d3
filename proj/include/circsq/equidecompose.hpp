#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "circsq/edge_field.hpp"
#include "circsq/lattice.hpp"
#include "circsq/tiling.hpp"

namespace circsq {

// c_int = ceil(c) + 3^d
std::int64_t integral_flow_bound(double c, int d);

// Smallest K <= core_side / 4 whose rectangular tiles V all satisfy
// c_int |dV| <= min(|A n V|, |B n V|); nullopt when none does.
std::optional<std::int64_t> certified_K(const LatticeWindow& window, const IndicatorField& field,
                                        std::int64_t c_int);
// Same, but throws InvalidArgument when no K qualifies.
std::int64_t select_K(const LatticeWindow& window, const IndicatorField& field, std::int64_t c_int);

struct TileFlow {
  std::map<std::pair<int, int>, std::int64_t> transfer;  // (R, S) -> net flow R to S, both orders stored
  std::vector<std::vector<int>> neighbours;              // sorted
  std::vector<std::int64_t> frontier_flux;               // flow from R to vertices outside the core
  std::vector<bool> interior;                            // no edge from R leaves the core
  std::vector<std::int64_t> count_A;
  std::vector<std::int64_t> count_B;

  std::int64_t get(int R, int S) const;
  std::size_t tile_count() const { return neighbours.size(); }
};

// The flow must be integral with divergence f on the core.
TileFlow tile_flow(const EdgeField<std::int64_t>& psi, const Tiling& tiling, const IndicatorField& field);

struct Matching {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // (A vertex, B vertex), sorted by A vertex
  std::vector<bool> used;                                    // per tile
  std::vector<std::int64_t> unmatched_A;
  std::vector<std::int64_t> unmatched_B;
  std::size_t demoted = 0;           // tiles dropped because a neighbour could not serve them
  std::size_t interior_excluded = 0;  // interior tiles not used
};

Matching build_matching(const TileFlow& tf, const Tiling& tiling, const IndicatorField& field);

struct Assignment {
  std::int64_t source = 0;  // window index in A
  Point gamma{};
  int piece = 0;
};

struct PieceMap {
  int d = 0;
  std::int64_t K = 0;
  std::int64_t bound = 0;  // every |gamma|_inf is below this
  std::vector<Point> gammas;  // piece id -> translation, lexicographic
  std::vector<Assignment> assignments;  // sorted by source
};

// |gamma|_inf bound for matches produced on this tiling.
std::int64_t gamma_bound(const LatticeWindow& window, const Tiling& tiling);
// Largest distance from a vertex of a frontier-touching tile to the outside of the core.
std::int64_t frontier_reach(const LatticeWindow& window, const Tiling& tiling);

PieceMap extract_pieces(const LatticeWindow& window, const Matching& matching, std::int64_t K, std::int64_t bound);

struct VerifyReport {
  bool pieces_disjoint = true;
  bool images_disjoint = true;
  bool sources_in_A = true;
  bool images_in_B = true;
  bool injective = true;
  bool counts_ok = true;
  bool bound_ok = true;
  bool pieces_consistent = true;
  bool locality_ok = true;
  std::int64_t matched = 0;
  std::int64_t core_A = 0;
  std::int64_t core_B = 0;
  std::int64_t unmatched_A = 0;
  std::int64_t unmatched_B = 0;
  std::vector<std::string> problems;

  bool map_ok() const {
    return pieces_disjoint && images_disjoint && sources_in_A && images_in_B && injective && counts_ok && bound_ok &&
           pieces_consistent;
  }
  bool ok() const { return map_ok() && locality_ok; }
  double unmatched_fraction() const;
};

// Rechecks a piece map from scratch against the sampled field. Unmatched
// core points must lie within `reach` of the outside of the core.
VerifyReport verify_equidecomposition(const PieceMap& pieces, const IndicatorField& field, std::int64_t reach);

}  // namespace circsq

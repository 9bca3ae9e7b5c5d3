#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "circsq/dyadic.hpp"
#include "circsq/edge_field.hpp"
#include "circsq/finite_flow.hpp"
#include "circsq/lattice.hpp"
#include "circsq/tiling.hpp"

namespace circsq {

// Finite graph on the core plus the layer just outside it. Core-core and
// core-layer lattice edges become real edges; every layer vertex is also
// joined to one extra sink vertex, whose edge absorbs whatever the layer
// vertex exchanges with the core so that layer vertices are balanced.
class WorkingGraph {
 public:
  explicit WorkingGraph(const LatticeWindow& window);

  const LatticeWindow& window() const { return window_; }
  const FiniteGraph& graph() const { return graph_; }
  int sink() const { return sink_; }
  int real_edge_count() const { return real_edges_; }
  int core_vertex_count() const { return core_count_; }
  // graph vertex -> window index, -1 for the sink
  std::int64_t window_index(int v) const { return window_index_[v]; }
  // window index -> graph vertex, -1 when not part of the graph
  int vertex_of(std::int64_t index) const { return vertex_of_[index]; }
  bool is_core(int v) const { return v < core_count_; }
  // lattice edge of a real graph edge; graph orientation = positive lattice orientation
  const EdgeKey& edge_key(int e) const { return keys_[e]; }

  // Storage box [lo, hi) holding the lower vertex of every real edge.
  void storage_box(Point& lo, Point& hi) const;

  // Edge values for the graph; sink edges get the balancing value.
  std::vector<Dyadic> gather(const EdgeField<Dyadic>& field) const;
  // f on the core, 0 on the layer, minus the core total on the sink.
  std::vector<std::int64_t> demand(const IndicatorField& field) const;

 private:
  LatticeWindow window_;
  FiniteGraph graph_;
  std::vector<std::int64_t> window_index_;
  std::vector<int> vertex_of_;
  std::vector<EdgeKey> keys_;
  int sink_ = 0;
  int real_edges_ = 0;
  int core_count_ = 0;
};

// Vertices are the edges of dF; two are adjacent iff a lattice 3-cycle
// contains both.
struct BoundaryCycleGraph {
  std::vector<EdgeKey> vertices;        // sorted
  std::vector<std::vector<int>> adjacency;  // sorted neighbour lists
  std::int64_t edge_count = 0;

  int find(const EdgeKey& e) const;  // -1 when absent
};

BoundaryCycleGraph build_boundary_cycle_graph(const LatticeWindow& window, const Region& F);

// Number of lattice 3-cycles through an edge with `zero_coords` zero entries.
std::int64_t triangles_through_edge(int d, int zero_coords);

// Closed walk e_0 .. e_{m-1} (back to e_0) using every H-edge once. Step i runs
// around the triangle (x, y, z) where e_i = {x, y}, e_{i+1} = {y, z}.
struct EulerWalk {
  std::vector<int> sequence;  // indices into H.vertices, length m
  struct Triangle {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;
  };
  std::vector<Triangle> triangles;
};

EulerWalk euler_cycle(const LatticeWindow& window, const BoundaryCycleGraph& H);

// Pushes the fractional part of each e_i around its triangle; afterwards dF
// is integral. Edges are changed only inside the second boundary of F.
void adjust_on_region(EdgeField<Dyadic>& phi, const LatticeWindow& window, const Region& F);

// Routes f - div(psi) from the core out to the layer with at most
// `unit_capacity` per edge (no bound when empty) and returns psi plus that
// correction, an exact f-flow on the core. Throws InfeasibleError.
EdgeField<Dyadic> repair_flow(const WorkingGraph& wg, const EdgeField<Dyadic>& psi, const IndicatorField& field,
                              std::optional<std::int64_t> unit_capacity);

enum class IntegralizeMode { Cover, Direct };

struct IntegralizeResult {
  EdgeField<std::int64_t> flow;  // values on core-incident edges, 0 elsewhere
  Dyadic max_deviation;
  std::size_t regions = 0;
  std::size_t components = 0;
  double coverage = 0.0;
};

// Largest level index whose cover centres still fit in the core; -1 if none.
int max_cover_levels(const LatticeWindow& window, int n);

IntegralizeResult integralize_flow(const WorkingGraph& wg, const EdgeField<Dyadic>& phi, const IndicatorField& field,
                                   IntegralizeMode mode, int cover_n = 3, int cover_levels = 0);

}  // namespace circsq

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "circsq/dyadic.hpp"
#include "circsq/error.hpp"

namespace circsq {

// Simple undirected graph. Edge e joins edges()[e].first and .second and
// carries the orientation first -> second for flow values.
class FiniteGraph {
 public:
  FiniteGraph(int vertex_count, std::vector<std::pair<int, int>> edges);

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::pair<int, int>& edge(int e) const { return edges_[e]; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  // (edge id, neighbour) sorted by neighbour
  const std::vector<std::pair<int, int>>& incident(int v) const { return incidence_[v]; }

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<std::pair<int, int>>> incidence_;
};

// c(u,v) in forward[e] and c(v,u) in backward[e] for edge e = (u,v).
struct Capacity {
  std::vector<std::int64_t> forward;
  std::vector<std::int64_t> backward;

  static Capacity uniform(const FiniteGraph& g, std::int64_t c);
  std::int64_t out_of(const FiniteGraph& g, int e, int from) const;
};

struct MaxFlowResult {
  std::int64_t value = 0;
  std::vector<std::int64_t> flow;  // per edge, oriented first -> second
  std::vector<bool> source_side;   // residual reachability from s
  std::vector<int> cut_edges;      // edges with exactly one endpoint on the source side
};

// Deterministic Dinic max-flow; arcs are scanned in neighbour-index order.
MaxFlowResult st_max_flow(const FiniteGraph& g, int s, int t, const Capacity& cap);

enum class CutSide { Lower, Upper };

// F violates -c(in F) <= sum_F f (Lower) or sum_F f <= c(out of F) (Upper).
struct CutCertificate {
  std::vector<int> F;
  CutSide side = CutSide::Upper;
  std::int64_t f_sum = 0;
  std::int64_t capacity = 0;  // c(in F) for Lower, c(out of F) for Upper
  std::int64_t slack = 0;     // amount by which the inequality fails, > 0

  std::string describe() const;
};

// Recomputes both sides of the claimed inequality; true iff it really fails.
bool certificate_violated(const FiniteGraph& g, std::span<const std::int64_t> f, const Capacity& cap,
                          const CutCertificate& cert);

// No flow exists within the given capacities; carries the violated cut.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, CutCertificate certificate)
      : Error(what + ": " + certificate.describe()), certificate_(std::move(certificate)) {}
  const CutCertificate& certificate() const { return certificate_; }

 private:
  CutCertificate certificate_;
};

struct FeasibilityResult {
  std::optional<std::vector<std::int64_t>> flow;
  std::optional<CutCertificate> certificate;
  bool feasible() const { return flow.has_value(); }
};

FeasibilityResult f_flow_feasible(const FiniteGraph& g, std::span<const std::int64_t> f, const Capacity& cap);

std::vector<std::int64_t> flow_divergence(const FiniteGraph& g, std::span<const std::int64_t> flow);
std::vector<Dyadic> flow_divergence(const FiniteGraph& g, std::span<const Dyadic> flow);

// Integral f-flow within distance < 1 of phi on every edge, equal to phi
// wherever phi is already an integer.
std::vector<std::int64_t> round_flow(const FiniteGraph& g, std::span<const std::int64_t> f,
                                     std::span<const Dyadic> phi);

// Text dump of the residual network of `flow`: a header line
// "residual <vertices> <arcs>" followed by one "tail head residual" line per
// arc with positive residual, in edge order (forward arc first).
void dump_residual(std::ostream& os, const FiniteGraph& g, const Capacity& cap, std::span<const std::int64_t> flow);

}  // namespace circsq

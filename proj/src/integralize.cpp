#include "circsq/integralize.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "circsq/error.hpp"

namespace circsq {
namespace {

Point plus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

Point minus(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

std::int64_t upper_of(const LatticeWindow& w, const EdgeKey& e) {
  const auto& dirs = DirectionTable::get(w.d());
  return w.index(plus(w.point(e.lower), dirs.dir(dirs.positive_dir(e.slot))));
}

EdgeKey key_of(const LatticeWindow& w, std::int64_t a, std::int64_t b) {
  const auto& dirs = DirectionTable::get(w.d());
  const int dir = dirs.find(minus(w.point(b), w.point(a)));
  if (dir < 0) throw InvalidArgument("vertices are not lattice neighbours");
  if (dirs.is_positive(dir)) return {a, dirs.slot(dir)};
  return {b, dirs.slot(dirs.negation(dir))};
}

// value on the oriented edge (a, b)
Dyadic oriented(const EdgeField<Dyadic>& phi, const LatticeWindow& w, std::int64_t a, std::int64_t b) {
  const auto& dirs = DirectionTable::get(w.d());
  return phi.get(w.point(a), dirs.find(minus(w.point(b), w.point(a))));
}

void push(EdgeField<Dyadic>& phi, const LatticeWindow& w, std::int64_t a, std::int64_t b, const Dyadic& delta) {
  const auto& dirs = DirectionTable::get(w.d());
  phi.add_to(w.point(a), dirs.find(minus(w.point(b), w.point(a))), delta);
}

int pow3(int d) {
  int r = 1;
  for (int i = 0; i < d; ++i) r *= 3;
  return r;
}

}  // namespace

WorkingGraph::WorkingGraph(const LatticeWindow& window)
    : window_(window), graph_(0, {}), vertex_of_(static_cast<std::size_t>(window.size()), -1) {
  if (window.margin() < 1) throw InvalidArgument("the working graph needs a margin of at least 1");
  const auto& dirs = DirectionTable::get(window.d());
  for (std::int64_t idx = 0; idx < window.size(); ++idx) {
    if (!window.in_core(idx)) continue;
    vertex_of_[idx] = static_cast<int>(window_index_.size());
    window_index_.push_back(idx);
  }
  core_count_ = static_cast<int>(window_index_.size());
  std::vector<std::int64_t> layer;
  for (int v = 0; v < core_count_; ++v) {
    const Point p = window.point(window_index_[v]);
    for (int i = 0; i < dirs.count(); ++i) {
      const Point q = plus(p, dirs.dir(i));
      const auto qi = window.index(q);
      if (!window.in_core(q)) layer.push_back(qi);
    }
  }
  std::sort(layer.begin(), layer.end());
  layer.erase(std::unique(layer.begin(), layer.end()), layer.end());
  for (auto idx : layer) {
    vertex_of_[idx] = static_cast<int>(window_index_.size());
    window_index_.push_back(idx);
  }
  sink_ = static_cast<int>(window_index_.size());
  window_index_.push_back(-1);

  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < core_count_; ++v) {
    const std::int64_t idx = window_index_[v];
    const Point p = window.point(idx);
    for (int i = 0; i < dirs.count(); ++i) {
      const Point q = plus(p, dirs.dir(i));
      const auto qi = window.index(q);
      const bool q_core = window.in_core(q);
      if (q_core && !dirs.is_positive(i)) continue;  // added from the lower end
      if (dirs.is_positive(i)) {
        edges.emplace_back(v, vertex_of_[qi]);
        keys_.push_back({idx, dirs.slot(i)});
      } else {
        edges.emplace_back(vertex_of_[qi], v);
        keys_.push_back({qi, dirs.slot(dirs.negation(i))});
      }
    }
  }
  real_edges_ = static_cast<int>(edges.size());
  for (int v = core_count_; v < sink_; ++v) edges.emplace_back(v, sink_);
  graph_ = FiniteGraph(sink_ + 1, std::move(edges));
}

void WorkingGraph::storage_box(Point& lo, Point& hi) const {
  lo = Point{};
  hi = Point{};
  for (int i = 0; i < window_.d(); ++i) {
    lo[i] = window_.core_lo() - 1;
    hi[i] = window_.core_hi() + 1;
  }
}

std::vector<Dyadic> WorkingGraph::gather(const EdgeField<Dyadic>& field) const {
  std::vector<Dyadic> values(static_cast<std::size_t>(graph_.edge_count()));
  std::vector<Dyadic> out_sum(static_cast<std::size_t>(graph_.vertex_count()));
  for (int e = 0; e < real_edges_; ++e) {
    values[e] = field.at(window_.point(keys_[e].lower), keys_[e].slot);
    out_sum[graph_.edge(e).first] += values[e];
    out_sum[graph_.edge(e).second] -= values[e];
  }
  for (int e = real_edges_; e < graph_.edge_count(); ++e) values[e] = -out_sum[graph_.edge(e).first];
  return values;
}

std::vector<std::int64_t> WorkingGraph::demand(const IndicatorField& field) const {
  std::vector<std::int64_t> f(static_cast<std::size_t>(graph_.vertex_count()), 0);
  std::int64_t total = 0;
  for (int v = 0; v < core_count_; ++v) {
    f[v] = field.value(window_index_[v]);
    total += f[v];
  }
  f[sink_] = -total;
  return f;
}

int BoundaryCycleGraph::find(const EdgeKey& e) const {
  auto it = std::lower_bound(vertices.begin(), vertices.end(), e);
  if (it == vertices.end() || !(*it == e)) return -1;
  return static_cast<int>(it - vertices.begin());
}

std::int64_t triangles_through_edge(int d, int zero_coords) {
  if (zero_coords < 0 || zero_coords >= d) throw InvalidArgument("an edge has between 0 and d-1 zero coordinates");
  std::int64_t r = 1;
  for (int i = 0; i < zero_coords; ++i) r *= 3;
  for (int i = zero_coords; i < d; ++i) r *= 2;
  return r - 2;
}

BoundaryCycleGraph build_boundary_cycle_graph(const LatticeWindow& window, const Region& F) {
  const int d = window.d();
  if (d < 2) throw InvalidArgument("the lattice graph has no 3-cycles in dimension 1");
  BoundaryCycleGraph H;
  if (F.empty()) return H;
  if (!is_connected(window, F)) throw InvalidArgument("region is not connected");
  const auto& dirs = DirectionTable::get(d);
  for (auto idx : F.vertices()) {
    const Point p = window.point(idx);
    for (int i = 0; i < dirs.count(); ++i) {
      if (!window.contains(plus(p, dirs.dir(i)))) throw InvalidArgument("region's neighbourhood leaves the window");
    }
  }
  if (fill_holes(window, F).size() != F.size()) throw InvalidArgument("region has holes");

  H.vertices = boundary(window, F);
  H.adjacency.resize(H.vertices.size());
  for (std::size_t k = 0; k < H.vertices.size(); ++k) {
    const EdgeKey& e = H.vertices[k];
    const std::int64_t a = e.lower;
    const std::int64_t b = upper_of(window, e);
    const Point pa = window.point(a);
    const Point pb = window.point(b);
    const bool a_in = F.contains(a);
    for (int i = 0; i < dirs.count(); ++i) {
      const Point pz = plus(pa, dirs.dir(i));
      if (pz == pb || linf_norm(minus(pz, pb), d) != 1) continue;
      const std::int64_t z = window.index(pz);
      const bool z_in = F.contains(z);
      // exactly one of {a,z}, {b,z} crosses dF
      const EdgeKey other = (z_in == a_in) ? key_of(window, z, b) : key_of(window, a, z);
      const int j = H.find(other);
      if (j < 0) throw InvariantViolation("3-cycle partner is not a boundary edge");
      H.adjacency[k].push_back(j);
    }
  }
  for (std::size_t k = 0; k < H.vertices.size(); ++k) {
    auto& adj = H.adjacency[k];
    std::sort(adj.begin(), adj.end());
    if (std::adjacent_find(adj.begin(), adj.end()) != adj.end()) {
      throw InvariantViolation("boundary cycle graph is not simple");
    }
    const Point g = dirs.dir(dirs.positive_dir(H.vertices[k].slot));
    int zeros = 0;
    for (int i = 0; i < d; ++i) zeros += g[i] == 0;
    const auto expected = triangles_through_edge(d, zeros);
    if (static_cast<std::int64_t>(adj.size()) != expected || adj.size() % 2 != 0) {
      std::ostringstream msg;
      msg << "boundary edge at " << format_point(window.point(H.vertices[k].lower), d) << " slot "
          << H.vertices[k].slot << " has degree " << adj.size() << ", expected " << expected;
      throw InvariantViolation(msg.str());
    }
    H.edge_count += static_cast<std::int64_t>(adj.size());
  }
  H.edge_count /= 2;

  std::vector<bool> seen(H.vertices.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : H.adjacency[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  if (reached != H.vertices.size()) {
    std::ostringstream msg;
    msg << "boundary cycle graph is disconnected (" << reached << " of " << H.vertices.size()
        << " reached); region vertices:";
    for (auto idx : F.vertices()) msg << ' ' << format_point(window.point(idx), d);
    throw InvariantViolation(msg.str());
  }
  return H;
}

EulerWalk euler_cycle(const LatticeWindow& window, const BoundaryCycleGraph& H) {
  EulerWalk walk;
  const int n = static_cast<int>(H.vertices.size());
  if (n == 0) return walk;
  std::vector<std::vector<std::pair<int, int>>> inc(n);  // (neighbour, edge id)
  int edges = 0;
  for (int u = 0; u < n; ++u) {
    if (H.adjacency[u].size() % 2 != 0) throw InvalidArgument("odd-degree vertex in the boundary cycle graph");
    for (int v : H.adjacency[u]) {
      if (u < v) {
        inc[u].emplace_back(v, edges);
        inc[v].emplace_back(u, edges);
        ++edges;
      }
    }
  }
  for (auto& l : inc) std::sort(l.begin(), l.end());
  if (edges == 0) throw InvalidArgument("boundary cycle graph has no edges");

  std::vector<bool> used(static_cast<std::size_t>(edges), false);
  std::vector<std::size_t> next(n, 0);
  std::vector<int> stack{0};
  std::vector<int> circuit;
  while (!stack.empty()) {
    const int u = stack.back();
    while (next[u] < inc[u].size() && used[inc[u][next[u]].second]) ++next[u];
    if (next[u] == inc[u].size()) {
      circuit.push_back(u);
      stack.pop_back();
    } else {
      const auto [v, e] = inc[u][next[u]];
      used[e] = true;
      stack.push_back(v);
    }
  }
  if (static_cast<int>(circuit.size()) != edges + 1) throw InvalidArgument("boundary cycle graph is disconnected");
  std::reverse(circuit.begin(), circuit.end());
  circuit.pop_back();
  walk.sequence = std::move(circuit);

  const std::size_t m = walk.sequence.size();
  walk.triangles.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const EdgeKey& e = H.vertices[walk.sequence[i]];
    const EdgeKey& f = H.vertices[walk.sequence[(i + 1) % m]];
    const std::int64_t e0 = e.lower, e1 = upper_of(window, e);
    const std::int64_t f0 = f.lower, f1 = upper_of(window, f);
    EulerWalk::Triangle t;
    if (e0 == f0 || e0 == f1) {
      t = {e1, e0, e0 == f0 ? f1 : f0};
    } else if (e1 == f0 || e1 == f1) {
      t = {e0, e1, e1 == f0 ? f1 : f0};
    } else {
      throw InvariantViolation("consecutive walk edges do not share a vertex");
    }
    walk.triangles.push_back(t);
  }
  return walk;
}

void adjust_on_region(EdgeField<Dyadic>& phi, const LatticeWindow& window, const Region& F) {
  if (F.empty()) return;
  const auto H = build_boundary_cycle_graph(window, F);
  const auto bd = H.vertices;

  Dyadic flux;
  auto outward = [&](const EdgeKey& e) {
    const std::int64_t b = upper_of(window, e);
    return F.contains(e.lower) ? oriented(phi, window, e.lower, b) : oriented(phi, window, b, e.lower);
  };
  for (const auto& e : bd) flux += outward(e);
  if (!flux.is_integer()) throw InvariantViolation("net flow out of the region is not an integer: " + flux.to_string());

  const auto walk = euler_cycle(window, H);
  for (const auto& t : walk.triangles) {
    const Dyadic v = oriented(phi, window, t.x, t.y);
    const Dyadic alpha = v - Dyadic(v.floor(), 0);
    if (alpha.is_zero()) continue;
    push(phi, window, t.x, t.y, -alpha);
    push(phi, window, t.y, t.z, -alpha);
    push(phi, window, t.z, t.x, -alpha);
  }
  for (const auto& e : bd) {
    if (!outward(e).is_integer()) {
      throw InvariantViolation("boundary edge at " + format_point(window.point(e.lower), window.d()) +
                               " is not integral after adjustment");
    }
  }
}

EdgeField<Dyadic> repair_flow(const WorkingGraph& wg, const EdgeField<Dyadic>& psi, const IndicatorField& field,
                              std::optional<std::int64_t> unit_capacity) {
  const auto& g = wg.graph();
  const auto values = wg.gather(psi);
  const auto div = flow_divergence(g, std::span<const Dyadic>(values));
  const auto f = wg.demand(field);
  std::vector<Dyadic> residual(static_cast<std::size_t>(wg.core_vertex_count()));
  std::uint32_t E = 0;
  for (int v = 0; v < wg.core_vertex_count(); ++v) {
    residual[v] = Dyadic(f[v]) - div[v];
    E = std::max(E, residual[v].exponent());
  }
  if (E > 40) throw InvalidArgument("residual denominators too large to route");
  std::vector<std::int64_t> scaled(static_cast<std::size_t>(g.vertex_count()), 0);
  std::int64_t total = 0;
  std::int64_t abs_total = 0;
  for (int v = 0; v < wg.core_vertex_count(); ++v) {
    scaled[v] = residual[v].scale_pow2(E).to_int64();
    total += scaled[v];
    abs_total += std::abs(scaled[v]);
  }
  scaled[wg.sink()] = -total;
  // any feasible flow can be made acyclic, so no edge needs more than the total demand
  const std::int64_t unbounded = std::max<std::int64_t>(abs_total, 1);
  std::int64_t per_edge = unbounded;
  if (unit_capacity) {
    if (*unit_capacity < 0) throw InvalidArgument("repair capacity must be non-negative");
    const __int128 c = static_cast<__int128>(*unit_capacity) << E;
    per_edge = static_cast<std::int64_t>(std::min<__int128>(c, unbounded));
  }
  Capacity cap = Capacity::uniform(g, per_edge);
  for (int e = wg.real_edge_count(); e < g.edge_count(); ++e) {
    cap.forward[e] = unbounded;
    cap.backward[e] = unbounded;
  }
  auto result = f_flow_feasible(g, scaled, cap);
  if (!result.feasible()) throw InfeasibleError("no repair flow within capacity", *result.certificate);

  EdgeField<Dyadic> out = psi;
  const auto& window = wg.window();
  for (int e = 0; e < wg.real_edge_count(); ++e) {
    const auto fe = (*result.flow)[e];
    if (fe == 0) continue;
    const EdgeKey& k = wg.edge_key(e);
    out.at(window.point(k.lower), k.slot) += Dyadic(fe, E);
  }
  return out;
}

int max_cover_levels(const LatticeWindow& window, int n) {
  int best = -1;
  std::int64_t r = n;
  for (int i = 0; i <= 6; ++i) {
    r *= 12;
    if (window.core_side() - 2 * (r / 2 + n + 1) <= 0) break;
    best = i;
  }
  return best;
}

IntegralizeResult integralize_flow(const WorkingGraph& wg, const EdgeField<Dyadic>& phi, const IndicatorField& field,
                                   IntegralizeMode mode, int cover_n, int cover_levels) {
  const auto& window = wg.window();
  const auto& g = wg.graph();
  const auto f = wg.demand(field);
  Point lo{}, hi{};
  wg.storage_box(lo, hi);
  IntegralizeResult result{EdgeField<std::int64_t>(window, lo, hi), Dyadic(), 0, 0, 0.0};
  std::vector<std::int64_t> rounded;
  const auto original = wg.gather(phi);

  if (mode == IntegralizeMode::Direct) {
    rounded = round_flow(g, f, original);
    result.components = 1;
  } else {
    EdgeField<Dyadic> adjusted = phi;
    const Cover cover = boundary_disjoint_cover(window, cover_n, cover_levels);
    std::vector<EdgeKey> D;
    for (const auto& [region, level] : cover.regions) {
      adjust_on_region(adjusted, window, region);
      auto bd = boundary(window, region);
      D.insert(D.end(), bd.begin(), bd.end());
    }
    std::sort(D.begin(), D.end());
    result.regions = cover.regions.size();
    result.coverage = cover.coverage();
    const auto values = wg.gather(adjusted);

    std::vector<bool> in_D(static_cast<std::size_t>(g.edge_count()), false);
    for (int e = 0; e < wg.real_edge_count(); ++e) in_D[e] = std::binary_search(D.begin(), D.end(), wg.edge_key(e));

    // components of the graph with D removed
    std::vector<int> parent(static_cast<std::size_t>(g.vertex_count()));
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (int e = 0; e < g.edge_count(); ++e) {
      if (in_D[e]) continue;
      const int a = root(g.edge(e).first), b = root(g.edge(e).second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<int> comp_of(static_cast<std::size_t>(g.vertex_count()));
    std::vector<int> local(static_cast<std::size_t>(g.vertex_count()));
    std::vector<std::vector<int>> members;
    std::vector<int> id_of_root(static_cast<std::size_t>(g.vertex_count()), -1);
    for (int v = 0; v < g.vertex_count(); ++v) {
      const int r = root(v);
      if (id_of_root[r] < 0) {
        id_of_root[r] = static_cast<int>(members.size());
        members.emplace_back();
      }
      comp_of[v] = id_of_root[r];
      local[v] = static_cast<int>(members[comp_of[v]].size());
      members[comp_of[v]].push_back(v);
    }
    std::vector<std::vector<int>> comp_edges(members.size());
    std::vector<std::int64_t> sub_f(f.begin(), f.end());
    rounded.assign(static_cast<std::size_t>(g.edge_count()), 0);
    for (int e = 0; e < g.edge_count(); ++e) {
      if (in_D[e]) {
        const auto val = values[e].to_int64();  // integral after adjustment
        rounded[e] = val;
        sub_f[g.edge(e).first] -= val;
        sub_f[g.edge(e).second] += val;
      } else {
        comp_edges[comp_of[g.edge(e).first]].push_back(e);
      }
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (comp_edges[c].empty()) continue;
      std::vector<std::pair<int, int>> edges;
      std::vector<Dyadic> vals;
      std::vector<std::int64_t> demand;
      for (int e : comp_edges[c]) {
        edges.emplace_back(local[g.edge(e).first], local[g.edge(e).second]);
        vals.push_back(values[e]);
      }
      for (int v : members[c]) demand.push_back(sub_f[v]);
      const FiniteGraph sub(static_cast<int>(members[c].size()), std::move(edges));
      const auto part = round_flow(sub, demand, vals);
      for (std::size_t k = 0; k < comp_edges[c].size(); ++k) rounded[comp_edges[c][k]] = part[k];
    }
    result.components = members.size();
  }

  for (int e = 0; e < wg.real_edge_count(); ++e) {
    const EdgeKey& k = wg.edge_key(e);
    result.flow.at(window.point(k.lower), k.slot) = rounded[e];
    const Dyadic dev = (Dyadic(rounded[e]) - original[e]).abs();
    if (dev > result.max_deviation) result.max_deviation = dev;
  }
  const Dyadic limit = mode == IntegralizeMode::Direct ? Dyadic(1) : Dyadic(pow3(window.d()));
  const bool within = mode == IntegralizeMode::Direct ? result.max_deviation < limit : result.max_deviation <= limit;
  if (!within) throw InvariantViolation("integralization deviation " + result.max_deviation.to_string() + " over bound");
  return result;
}

}  // namespace circsq

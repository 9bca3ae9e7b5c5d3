#include "circsq/finite_flow.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "circsq/error.hpp"

namespace circsq {

FiniteGraph::FiniteGraph(int vertex_count, std::vector<std::pair<int, int>> edges)
    : n_(vertex_count), edges_(std::move(edges)), incidence_(vertex_count) {
  if (vertex_count < 0) throw InvalidArgument("negative vertex count");
  std::set<std::pair<int, int>> seen;
  for (int e = 0; e < edge_count(); ++e) {
    auto [u, v] = edges_[e];
    if (u < 0 || v < 0 || u >= n_ || v >= n_) throw InvalidArgument("edge endpoint out of range");
    if (u == v) throw InvalidArgument("loops are not allowed");
    if (!seen.emplace(std::min(u, v), std::max(u, v)).second) throw InvalidArgument("parallel edges are not allowed");
    incidence_[u].emplace_back(e, v);
    incidence_[v].emplace_back(e, u);
  }
  for (auto& inc : incidence_) {
    std::sort(inc.begin(), inc.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  }
}

Capacity Capacity::uniform(const FiniteGraph& g, std::int64_t c) {
  if (c < 0) throw InvalidArgument("capacities must be non-negative");
  return Capacity{std::vector<std::int64_t>(g.edge_count(), c), std::vector<std::int64_t>(g.edge_count(), c)};
}

std::int64_t Capacity::out_of(const FiniteGraph& g, int e, int from) const {
  return g.edge(e).first == from ? forward[e] : backward[e];
}

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

void check_capacity(const FiniteGraph& g, const Capacity& cap) {
  if (static_cast<int>(cap.forward.size()) != g.edge_count() || static_cast<int>(cap.backward.size()) != g.edge_count()) {
    throw InvalidArgument("capacity vector size does not match edge count");
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    if (cap.forward[e] < 0 || cap.backward[e] < 0) throw InvalidArgument("capacities must be non-negative");
  }
}

// Residual network with paired arcs a, a^1.
class Dinic {
 public:
  explicit Dinic(int n) : adj_(n) {}

  int add_arc(int u, int v, std::int64_t cap_uv, std::int64_t cap_vu) {
    const int a = static_cast<int>(head_.size());
    head_.push_back(v);
    res_.push_back(cap_uv);
    head_.push_back(u);
    res_.push_back(cap_vu);
    adj_[u].push_back(a);
    adj_[v].push_back(a + 1);
    return a;
  }

  // neighbour-index scan order
  void finalize() {
    for (auto& list : adj_) {
      std::stable_sort(list.begin(), list.end(), [&](int a, int b) { return head_[a] < head_[b]; });
    }
  }

  std::int64_t run(int s, int t) {
    std::int64_t total = 0;
    const int n = static_cast<int>(adj_.size());
    level_.assign(n, -1);
    it_.assign(n, 0);
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      total += blocking_flow(s, t);
    }
    return total;
  }

  std::int64_t residual(int a) const { return res_[a]; }
  int head(int a) const { return head_[a]; }

  std::vector<bool> reachable_from(int s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::deque<int> queue{s};
    seen[s] = true;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int a : adj_[u]) {
        if (res_[a] > 0 && !seen[head_[a]]) {
          seen[head_[a]] = true;
          queue.push_back(head_[a]);
        }
      }
    }
    return seen;
  }

  // vertices with a residual path to t
  std::vector<bool> reaching(int t) const {
    std::vector<bool> seen(adj_.size(), false);
    std::deque<int> queue{t};
    seen[t] = true;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int b : adj_[v]) {
        // arc b: v -> w; its partner b^1 is w -> v
        const int w = head_[b];
        if (res_[b ^ 1] > 0 && !seen[w]) {
          seen[w] = true;
          queue.push_back(w);
        }
      }
    }
    return seen;
  }

 private:
  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::deque<int> queue{s};
    level_[s] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int a : adj_[u]) {
        if (res_[a] > 0 && level_[head_[a]] < 0) {
          level_[head_[a]] = level_[u] + 1;
          queue.push_back(head_[a]);
        }
      }
    }
    return level_[t] >= 0;
  }

  std::int64_t blocking_flow(int s, int t) {
    std::int64_t total = 0;
    std::vector<int> path;
    int u = s;
    for (;;) {
      if (u == t) {
        std::int64_t push = kInf;
        for (int a : path) push = std::min(push, res_[a]);
        std::size_t first_saturated = path.size();
        for (std::size_t i = 0; i < path.size(); ++i) {
          res_[path[i]] -= push;
          res_[path[i] ^ 1] += push;
          if (res_[path[i]] == 0 && first_saturated == path.size()) first_saturated = i;
        }
        total += push;
        path.resize(first_saturated);
        u = path.empty() ? s : head_[path.back()];
        continue;
      }
      auto& i = it_[u];
      while (i < adj_[u].size()) {
        const int a = adj_[u][i];
        if (res_[a] > 0 && level_[head_[a]] == level_[u] + 1) break;
        ++i;
      }
      if (i < adj_[u].size()) {
        path.push_back(adj_[u][i]);
        u = head_[adj_[u][i]];
        continue;
      }
      level_[u] = -1;  // dead end
      if (path.empty()) break;
      const int a = path.back();
      path.pop_back();
      u = head_[a ^ 1];
      ++it_[u];
    }
    return total;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<int> head_;
  std::vector<std::int64_t> res_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
};

}  // namespace

MaxFlowResult st_max_flow(const FiniteGraph& g, int s, int t, const Capacity& cap) {
  if (s == t) throw InvalidArgument("source and sink coincide");
  if (s < 0 || t < 0 || s >= g.vertex_count() || t >= g.vertex_count()) throw InvalidArgument("terminal out of range");
  check_capacity(g, cap);
  Dinic net(g.vertex_count());
  for (int e = 0; e < g.edge_count(); ++e) net.add_arc(g.edge(e).first, g.edge(e).second, cap.forward[e], cap.backward[e]);
  net.finalize();
  MaxFlowResult out;
  out.value = net.run(s, t);
  out.flow.resize(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) out.flow[e] = cap.forward[e] - net.residual(2 * e);
  out.source_side = net.reachable_from(s);
  for (int e = 0; e < g.edge_count(); ++e) {
    if (out.source_side[g.edge(e).first] != out.source_side[g.edge(e).second]) out.cut_edges.push_back(e);
  }
  return out;
}

std::string CutCertificate::describe() const {
  std::ostringstream os;
  os << (side == CutSide::Lower ? "lower" : "upper") << " cut condition fails on |F|=" << F.size() << ": sum f = " << f_sum
     << ", " << (side == CutSide::Lower ? "capacity into F = " : "capacity out of F = ") << capacity
     << ", slack = " << slack;
  return os.str();
}

bool certificate_violated(const FiniteGraph& g, std::span<const std::int64_t> f, const Capacity& cap,
                          const CutCertificate& cert) {
  std::vector<bool> in(g.vertex_count(), false);
  for (int v : cert.F) {
    if (v < 0 || v >= g.vertex_count()) return false;
    in[v] = true;
  }
  std::int64_t sum = 0;
  for (int v : cert.F) sum += f[v];
  std::int64_t c_out = 0;
  std::int64_t c_in = 0;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edge(e);
    if (in[u] && !in[v]) {
      c_out += cap.forward[e];
      c_in += cap.backward[e];
    } else if (!in[u] && in[v]) {
      c_out += cap.backward[e];
      c_in += cap.forward[e];
    }
  }
  if (sum != cert.f_sum) return false;
  if (cert.side == CutSide::Lower) return cert.capacity == c_in && -c_in > sum;
  return cert.capacity == c_out && sum > c_out;
}

FeasibilityResult f_flow_feasible(const FiniteGraph& g, std::span<const std::int64_t> f, const Capacity& cap) {
  check_capacity(g, cap);
  if (static_cast<int>(f.size()) != g.vertex_count()) throw InvalidArgument("f has the wrong length");
  const int n = g.vertex_count();
  const int S = n;
  const int T = n + 1;
  Dinic net(n + 2);
  for (int e = 0; e < g.edge_count(); ++e) net.add_arc(g.edge(e).first, g.edge(e).second, cap.forward[e], cap.backward[e]);
  std::int64_t supply = 0;
  std::int64_t demand = 0;
  for (int v = 0; v < n; ++v) {
    if (f[v] > 0) {
      net.add_arc(S, v, f[v], 0);
      supply += f[v];
    } else if (f[v] < 0) {
      net.add_arc(v, T, -f[v], 0);
      demand -= f[v];
    }
  }
  net.finalize();
  const std::int64_t value = net.run(S, T);

  FeasibilityResult out;
  if (value == supply && value == demand) {
    std::vector<std::int64_t> flow(g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) flow[e] = cap.forward[e] - net.residual(2 * e);
    out.flow = std::move(flow);
    return out;
  }

  CutCertificate cert;
  std::vector<bool> member;
  if (value < demand) {
    cert.side = CutSide::Lower;
    member = net.reaching(T);
  } else {
    cert.side = CutSide::Upper;
    member = net.reachable_from(S);
  }
  for (int v = 0; v < n; ++v) {
    if (member[v]) {
      cert.F.push_back(v);
      cert.f_sum += f[v];
    }
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edge(e);
    if (member[u] == member[v]) continue;
    if (cert.side == CutSide::Lower) {
      cert.capacity += member[v] ? cap.forward[e] : cap.backward[e];
    } else {
      cert.capacity += member[u] ? cap.forward[e] : cap.backward[e];
    }
  }
  cert.slack = cert.side == CutSide::Lower ? -cert.capacity - cert.f_sum : cert.f_sum - cert.capacity;
  if (cert.slack <= 0) throw InvariantViolation("residual cut does not certify infeasibility");
  out.certificate = std::move(cert);
  return out;
}

std::vector<std::int64_t> flow_divergence(const FiniteGraph& g, std::span<const std::int64_t> flow) {
  std::vector<std::int64_t> div(g.vertex_count(), 0);
  for (int e = 0; e < g.edge_count(); ++e) {
    div[g.edge(e).first] += flow[e];
    div[g.edge(e).second] -= flow[e];
  }
  return div;
}

std::vector<Dyadic> flow_divergence(const FiniteGraph& g, std::span<const Dyadic> flow) {
  std::vector<Dyadic> div(g.vertex_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    div[g.edge(e).first] += flow[e];
    div[g.edge(e).second] -= flow[e];
  }
  return div;
}

std::vector<std::int64_t> round_flow(const FiniteGraph& g, std::span<const std::int64_t> f, std::span<const Dyadic> phi) {
  if (static_cast<int>(phi.size()) != g.edge_count()) throw InvalidArgument("phi has the wrong length");
  if (static_cast<int>(f.size()) != g.vertex_count()) throw InvalidArgument("f has the wrong length");
  const auto div = flow_divergence(g, phi);
  for (int v = 0; v < g.vertex_count(); ++v) {
    if (div[v] != Dyadic(f[v])) {
      throw InvalidArgument("divergence of phi differs from f at vertex " + std::to_string(v) + ": " + div[v].to_string());
    }
  }
  std::vector<std::int64_t> trunc(g.edge_count());
  Capacity cap{std::vector<std::int64_t>(g.edge_count(), 0), std::vector<std::int64_t>(g.edge_count(), 0)};
  for (int e = 0; e < g.edge_count(); ++e) {
    trunc[e] = Dyadic(phi[e].floor_toward_zero(), 0).to_int64();
    const int frac_sign = (phi[e] - Dyadic(trunc[e])).sign();
    if (frac_sign > 0) cap.forward[e] = 1;
    if (frac_sign < 0) cap.backward[e] = 1;
  }
  const auto div_trunc = flow_divergence(g, trunc);
  std::vector<std::int64_t> residual_demand(g.vertex_count());
  for (int v = 0; v < g.vertex_count(); ++v) residual_demand[v] = f[v] - div_trunc[v];
  auto fix = f_flow_feasible(g, residual_demand, cap);
  if (!fix.feasible()) throw InvariantViolation("rounding flow infeasible: " + fix.certificate->describe());
  for (int e = 0; e < g.edge_count(); ++e) trunc[e] += (*fix.flow)[e];
  return trunc;
}

void dump_residual(std::ostream& os, const FiniteGraph& g, const Capacity& cap, std::span<const std::int64_t> flow) {
  std::vector<std::tuple<int, int, std::int64_t>> arcs;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edge(e);
    if (const std::int64_t r = cap.forward[e] - flow[e]; r > 0) arcs.emplace_back(u, v, r);
    if (const std::int64_t r = cap.backward[e] + flow[e]; r > 0) arcs.emplace_back(v, u, r);
  }
  os << "residual " << g.vertex_count() << ' ' << arcs.size() << '\n';
  for (const auto& [u, v, r] : arcs) os << u << ' ' << v << ' ' << r << '\n';
}

}  // namespace circsq

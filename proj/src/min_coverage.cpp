#include <algorithm>
#include <limits>

#include "ucert/testgen.hpp"

namespace ucert {

namespace {

constexpr ArcIndex kReturnArc = std::numeric_limits<ArcIndex>::max();

/// Successive-shortest-path min-cost flow on a small dense network.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : head_(nodes, npos) {}

  std::size_t add_edge(std::size_t from, std::size_t to, long capacity, long cost) {
    std::size_t id = edges_.size();
    edges_.push_back({to, head_[from], capacity, cost});
    head_[from] = id;
    edges_.push_back({from, head_[to], 0, -cost});
    head_[to] = id + 1;
    return id;
  }

  long flow_on(std::size_t edge) const { return edges_[edge ^ 1].capacity; }

  /// Pushes as much flow as possible from s to t at minimum cost.
  long run(std::size_t s, std::size_t t) {
    const std::size_t n = head_.size();
    constexpr long inf = std::numeric_limits<long>::max() / 4;
    long total = 0;
    while (true) {
      // Bellman-Ford: residual costs may be negative; the network is tiny.
      std::vector<long> dist(n, inf);
      std::vector<std::size_t> via(n, npos);
      dist[s] = 0;
      for (std::size_t round = 0; round + 1 < n; ++round) {
        bool changed = false;
        for (std::size_t u = 0; u < n; ++u) {
          if (dist[u] == inf) continue;
          for (std::size_t e = head_[u]; e != npos; e = edges_[e].next) {
            const Edge& ed = edges_[e];
            if (ed.capacity > 0 && dist[u] + ed.cost < dist[ed.to]) {
              dist[ed.to] = dist[u] + ed.cost;
              via[ed.to] = e;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (dist[t] == inf) return total;
      long push = inf;
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to)
        push = std::min(push, edges_[via[v]].capacity);
      for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].capacity -= push;
        edges_[via[v] ^ 1].capacity += push;
      }
      total += push;
    }
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  struct Edge {
    std::size_t to;
    std::size_t next;
    long capacity;
    long cost;
  };
  std::vector<std::size_t> head_;
  std::vector<Edge> edges_;
};

}  // namespace

Generated generate_min_coverage(const UsageModel& model) {
  Generated g;
  const std::size_t n = model.state_count();
  if (model.arcs.empty()) return g;

  // Degree imbalance of model arcs plus one return arc sink -> source.
  std::vector<long> balance(n, 0);  // in - out
  for (const Arc& a : model.arcs) {
    ++balance[a.to];
    --balance[a.from];
  }
  ++balance[model.source];
  --balance[model.sink];

  const std::size_t super_source = n, super_sink = n + 1;
  const long unbounded = static_cast<long>(model.arcs.size() + 1) * static_cast<long>(n + 1);
  MinCostFlow flow(n + 2);
  std::vector<std::size_t> edge_of(model.arcs.size());
  for (ArcIndex a = 0; a < model.arcs.size(); ++a)
    edge_of[a] = flow.add_edge(model.arcs[a].from, model.arcs[a].to, unbounded, 1);
  std::size_t return_edge = flow.add_edge(model.sink, model.source, unbounded, 0);
  long needed = 0;
  for (StateIndex v = 0; v < n; ++v) {
    // Surplus inflow must leave through duplicated arcs.
    if (balance[v] > 0) {
      flow.add_edge(super_source, v, balance[v], 0);
      needed += balance[v];
    } else if (balance[v] < 0) {
      flow.add_edge(v, super_sink, -balance[v], 0);
    }
  }
  if (flow.run(super_source, super_sink) != needed) {
    g.warnings.push_back("min-coverage: model is not strongly connected through the return arc");
    return g;
  }

  // Multigraph adjacency in model arc order; the return arc goes last.
  std::vector<std::vector<ArcIndex>> adj(n);
  for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
    long copies = 1 + flow.flow_on(edge_of[a]);
    adj[model.arcs[a].from].insert(adj[model.arcs[a].from].end(), static_cast<std::size_t>(copies), a);
  }
  adj[model.sink].insert(adj[model.sink].end(),
                         static_cast<std::size_t>(1 + flow.flow_on(return_edge)), kReturnArc);

  auto head = [&](ArcIndex a) { return a == kReturnArc ? model.source : model.arcs[a].to; };

  // Hierholzer, iterative.
  std::vector<std::size_t> next(n, 0);
  std::vector<std::pair<StateIndex, ArcIndex>> stack{{model.source, kReturnArc}};
  std::vector<ArcIndex> circuit;
  while (!stack.empty()) {
    StateIndex v = stack.back().first;
    if (next[v] < adj[v].size()) {
      ArcIndex a = adj[v][next[v]++];
      stack.emplace_back(head(a), a);
    } else {
      if (stack.size() > 1) circuit.push_back(stack.back().second);
      stack.pop_back();
    }
  }
  std::reverse(circuit.begin(), circuit.end());

  // Rotate so the circuit starts right after a return, then split at returns.
  auto ret = std::find(circuit.begin(), circuit.end(), kReturnArc);
  std::rotate(circuit.begin(), ret + 1, circuit.end());
  std::vector<ArcIndex> current;
  for (ArcIndex a : circuit) {
    if (a == kReturnArc) {
      g.cases.push_back(make_test_case(model, current, g.cases.size() + 1, Method::min_coverage));
      current.clear();
    } else {
      current.push_back(a);
    }
  }
  return g;
}

}  // namespace ucert

#include "etk/flow.hpp"

#include <algorithm>
#include <queue>

#include "etk/core.hpp"

namespace etk {

MinCostFlow::MinCostFlow(std::size_t nodes) : adjacency_(nodes) {}

std::size_t MinCostFlow::add_edge(std::size_t from, std::size_t to, std::int64_t capacity,
                                  double cost) {
  if (from >= adjacency_.size() || to >= adjacency_.size()) {
    throw SolverError("flow edge references an unknown node");
  }
  if (from == to) throw SolverError("flow self-loops are not supported");
  if (cost < 0.0) throw SolverError("flow edge costs must be nonnegative");
  adjacency_[from].push_back({to, adjacency_[to].size(), capacity, cost});
  adjacency_[to].push_back({from, adjacency_[from].size() - 1, 0, -cost});
  handles_.emplace_back(from, adjacency_[from].size() - 1);
  original_capacity_.push_back(capacity);
  return handles_.size() - 1;
}

MinCostFlow::Result MinCostFlow::solve(std::size_t source, std::size_t sink,
                                       std::int64_t max_flow) {
  const std::size_t n = adjacency_.size();
  constexpr double kUnreached = std::numeric_limits<double>::infinity();
  std::vector<double> potential(n, 0.0);
  std::vector<double> dist(n);
  std::vector<std::size_t> prev_node(n), prev_arc(n);
  Result result;

  while (result.flow < max_flow) {
    std::fill(dist.begin(), dist.end(), kUnreached);
    dist[source] = 0.0;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[u]) continue;
      for (std::size_t k = 0; k < adjacency_[u].size(); ++k) {
        const Arc& arc = adjacency_[u][k];
        if (arc.capacity <= 0) continue;
        const double reduced = std::max(0.0, arc.cost + potential[u] - potential[arc.to]);
        const double nd = d + reduced;
        if (nd < dist[arc.to]) {
          dist[arc.to] = nd;
          prev_node[arc.to] = u;
          prev_arc[arc.to] = k;
          queue.emplace(nd, arc.to);
        }
      }
    }
    if (dist[sink] == kUnreached) break;
    for (std::size_t v = 0; v < n; ++v) {
      if (dist[v] != kUnreached) potential[v] += dist[v];
    }

    std::int64_t push = max_flow - result.flow;
    for (std::size_t v = sink; v != source; v = prev_node[v]) {
      push = std::min(push, adjacency_[prev_node[v]][prev_arc[v]].capacity);
    }
    for (std::size_t v = sink; v != source; v = prev_node[v]) {
      Arc& arc = adjacency_[prev_node[v]][prev_arc[v]];
      arc.capacity -= push;
      adjacency_[v][arc.rev].capacity += push;
      result.cost += static_cast<double>(push) * arc.cost;
    }
    result.flow += push;
  }
  return result;
}

std::int64_t MinCostFlow::flow(std::size_t edge) const {
  const auto [from, index] = handles_.at(edge);
  return original_capacity_[edge] - adjacency_[from][index].capacity;
}

}  // namespace etk

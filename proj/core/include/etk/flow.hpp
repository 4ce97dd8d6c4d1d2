#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace etk {

// Min-cost flow by successive shortest augmenting paths (Dijkstra on reduced
// costs with Johnson potentials). Costs must be nonnegative. Ties in path
// selection are broken by node index, so results are deterministic.
class MinCostFlow {
 public:
  static constexpr std::int64_t kInfinite = std::numeric_limits<std::int64_t>::max() / 4;

  explicit MinCostFlow(std::size_t nodes);

  // Returns an edge handle usable with flow().
  std::size_t add_edge(std::size_t from, std::size_t to, std::int64_t capacity, double cost);

  struct Result {
    std::int64_t flow = 0;
    double cost = 0.0;
  };

  // Sends up to max_flow units from source to sink at minimum cost.
  Result solve(std::size_t source, std::size_t sink, std::int64_t max_flow = kInfinite);

  std::int64_t flow(std::size_t edge) const;
  std::size_t node_count() const { return adjacency_.size(); }

 private:
  struct Arc {
    std::size_t to;
    std::size_t rev;
    std::int64_t capacity;
    double cost;
  };
  std::vector<std::vector<Arc>> adjacency_;
  std::vector<std::pair<std::size_t, std::size_t>> handles_;
  std::vector<std::int64_t> original_capacity_;
};

}  // namespace etk

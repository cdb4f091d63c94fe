#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace partmatch {

// Simple undirected graph over nodes 0..n-1 with bitset adjacency rows.
class UndirectedGraph {
 public:
  explicit UndirectedGraph(int num_nodes = 0);

  int size() const { return n_; }
  int words() const { return words_; }
  void add_edge(int u, int v);
  bool adjacent(int u, int v) const;
  int degree(int u) const;
  std::size_t num_edges() const;
  std::span<const std::uint64_t> neighbors(int u) const;

 private:
  int n_;
  int words_;
  std::vector<std::uint64_t> adj_;
};

// Maximum clique by Bron-Kerbosch with Tomita pivoting over a degeneracy
// ordering, pruned by |R| + |P| against the best size found so far.
//
// Among cliques of maximum size the one with the smallest summed node_cost
// wins, then the lexicographically smallest sorted node list. node_cost may
// be empty (all zero). Returns sorted node indices; empty graph -> {}.
std::vector<int> max_clique(const UndirectedGraph& graph,
                            std::span<const double> node_cost = {});

bool is_clique(const UndirectedGraph& graph, std::span<const int> nodes);

}  // namespace partmatch

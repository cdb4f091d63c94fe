#include "partmatch/max_clique.h"

#include <algorithm>
#include <bit>
#include <limits>

#include "partmatch/error.h"

namespace partmatch {

UndirectedGraph::UndirectedGraph(int num_nodes)
    : n_(num_nodes), words_((num_nodes + 63) / 64),
      adj_(static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>((num_nodes + 63) / 64), 0) {
  if (num_nodes < 0) throw Error(ErrorCode::kInvalidArgument, "negative graph size");
}

void UndirectedGraph::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) {
    throw Error(ErrorCode::kIndexOutOfRange, "edge endpoint outside graph");
  }
  if (u == v) throw Error(ErrorCode::kInvalidArgument, "self loops are not allowed");
  adj_[static_cast<std::size_t>(u) * words_ + v / 64] |= std::uint64_t{1} << (v % 64);
  adj_[static_cast<std::size_t>(v) * words_ + u / 64] |= std::uint64_t{1} << (u % 64);
}

bool UndirectedGraph::adjacent(int u, int v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_) return false;
  return (adj_[static_cast<std::size_t>(u) * words_ + v / 64] >> (v % 64)) & 1u;
}

std::span<const std::uint64_t> UndirectedGraph::neighbors(int u) const {
  return std::span<const std::uint64_t>(adj_).subspan(static_cast<std::size_t>(u) * words_,
                                                      static_cast<std::size_t>(words_));
}

int UndirectedGraph::degree(int u) const {
  int d = 0;
  for (std::uint64_t w : neighbors(u)) d += std::popcount(w);
  return d;
}

std::size_t UndirectedGraph::num_edges() const {
  std::size_t total = 0;
  for (int u = 0; u < n_; ++u) total += static_cast<std::size_t>(degree(u));
  return total / 2;
}

bool is_clique(const UndirectedGraph& graph, std::span<const int> nodes) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (!graph.adjacent(nodes[i], nodes[j])) return false;
    }
  }
  return true;
}

namespace {

using Bits = std::vector<std::uint64_t>;

int count(const Bits& b) {
  int c = 0;
  for (std::uint64_t w : b) c += std::popcount(w);
  return c;
}

bool empty(const Bits& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint64_t w) { return w == 0; });
}

int intersect_count(const Bits& a, std::span<const std::uint64_t> b) {
  int c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += std::popcount(a[i] & b[i]);
  return c;
}

Bits intersect(const Bits& a, std::span<const std::uint64_t> b) {
  Bits out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] & b[i];
  return out;
}

void set_bit(Bits& b, int i) { b[i / 64] |= std::uint64_t{1} << (i % 64); }
void clear_bit(Bits& b, int i) { b[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

class Search {
 public:
  Search(const UndirectedGraph& g, std::span<const double> cost) : g_(g), cost_(cost) {}

  std::vector<int> run() {
    const int n = g_.size();
    if (n == 0) return {};
    const std::vector<int> order = degeneracy_order();
    std::vector<int> position(n);
    for (int i = 0; i < n; ++i) position[order[i]] = i;

    for (int v : order) {
      Bits p(g_.words(), 0);
      Bits x(g_.words(), 0);
      const auto nv = g_.neighbors(v);
      for (int w = 0; w < n; ++w) {
        if (!((nv[w / 64] >> (w % 64)) & 1u)) continue;
        if (position[w] > position[v]) {
          set_bit(p, w);
        } else {
          set_bit(x, w);
        }
      }
      r_.assign(1, v);
      expand(std::move(p), std::move(x));
    }
    return best_;
  }

 private:
  // Repeatedly remove a minimum-degree node; ties go to the lowest index.
  std::vector<int> degeneracy_order() const {
    const int n = g_.size();
    std::vector<int> degree(n);
    for (int u = 0; u < n; ++u) degree[u] = g_.degree(u);
    std::vector<bool> removed(n, false);
    std::vector<int> order;
    order.reserve(n);
    for (int step = 0; step < n; ++step) {
      int pick = -1;
      for (int u = 0; u < n; ++u) {
        if (!removed[u] && (pick < 0 || degree[u] < degree[pick])) pick = u;
      }
      removed[pick] = true;
      order.push_back(pick);
      for (int w = 0; w < n; ++w) {
        if (!removed[w] && g_.adjacent(pick, w)) --degree[w];
      }
    }
    return order;
  }

  void expand(Bits p, Bits x) {
    const int size_p = count(p);
    if (size_p == 0) {
      if (empty(x)) consider();
      return;
    }
    if (static_cast<int>(r_.size()) + size_p < static_cast<int>(best_.size())) return;

    // Pivot: node of P u X with the most neighbors in P.
    int pivot = -1;
    int pivot_score = -1;
    for (int w = 0; w < g_.size(); ++w) {
      const bool in_p = (p[w / 64] >> (w % 64)) & 1u;
      const bool in_x = (x[w / 64] >> (w % 64)) & 1u;
      if (!in_p && !in_x) continue;
      const int score = intersect_count(p, g_.neighbors(w));
      if (score > pivot_score) {
        pivot_score = score;
        pivot = w;
      }
    }
    const auto pivot_nbrs = g_.neighbors(pivot);
    std::vector<int> branch;
    for (int w = 0; w < g_.size(); ++w) {
      const bool in_p = (p[w / 64] >> (w % 64)) & 1u;
      const bool in_pivot = (pivot_nbrs[w / 64] >> (w % 64)) & 1u;
      if (in_p && !in_pivot) branch.push_back(w);
    }
    int remaining = size_p;
    for (int v : branch) {
      if (static_cast<int>(r_.size()) + remaining < static_cast<int>(best_.size())) return;
      const auto nv = g_.neighbors(v);
      r_.push_back(v);
      expand(intersect(p, nv), intersect(x, nv));
      r_.pop_back();
      clear_bit(p, v);
      set_bit(x, v);
      --remaining;
    }
  }

  void consider() {
    std::vector<int> clique = r_;
    std::sort(clique.begin(), clique.end());
    double total = 0.0;
    if (!cost_.empty()) {
      for (int v : clique) total += cost_[static_cast<std::size_t>(v)];
    }
    bool better = false;
    if (clique.size() != best_.size()) {
      better = clique.size() > best_.size();
    } else if (total != best_cost_) {
      better = total < best_cost_;
    } else {
      better = clique < best_;
    }
    if (better) {
      best_ = std::move(clique);
      best_cost_ = total;
    }
  }

  const UndirectedGraph& g_;
  std::span<const double> cost_;
  std::vector<int> r_;
  std::vector<int> best_;
  double best_cost_ = std::numeric_limits<double>::infinity();
};

}  // namespace

std::vector<int> max_clique(const UndirectedGraph& graph, std::span<const double> node_cost) {
  if (!node_cost.empty() && node_cost.size() != static_cast<std::size_t>(graph.size())) {
    throw Error(ErrorCode::kInvalidArgument, "node_cost size does not match graph");
  }
  return Search(graph, node_cost).run();
}

}  // namespace partmatch

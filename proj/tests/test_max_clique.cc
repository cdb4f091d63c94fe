#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.h"
#include "partmatch/max_clique.h"

using namespace partmatch;

namespace {

UndirectedGraph random_graph(int n, double p, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution edge(p);
  UndirectedGraph g(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (edge(rng)) g.add_edge(u, v);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("triangle plus pendant") {
  UndirectedGraph g(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  g.add_edge(2, 3);
  CHECK(max_clique(g) == std::vector<int>{0, 1, 2});
  CHECK(g.num_edges() == 4);
  CHECK(g.degree(2) == 3);
}

TEST_CASE("five-cycle picks the lexicographically smallest edge") {
  UndirectedGraph g(5);
  for (int i = 0; i < 5; ++i) g.add_edge(i, (i + 1) % 5);
  CHECK(max_clique(g) == std::vector<int>{0, 1});
  // costs steer the choice among equal-size cliques
  const std::vector<double> cost = {5, 5, 1, 1, 5};
  CHECK(max_clique(g, cost) == std::vector<int>{2, 3});
}

TEST_CASE("degenerate graphs") {
  CHECK(max_clique(UndirectedGraph(0)).empty());
  CHECK(max_clique(UndirectedGraph(3)) == std::vector<int>{0});
  UndirectedGraph g(2);
  g.add_edge(0, 1);
  g.add_edge(1, 0);  // duplicate edges are harmless
  CHECK(g.num_edges() == 1);
  CHECK(max_clique(g) == std::vector<int>{0, 1});
}

TEST_CASE("is_clique") {
  UndirectedGraph g(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  CHECK(is_clique(g, std::vector<int>{0, 1, 2}));
  CHECK(is_clique(g, std::vector<int>{3}));
  CHECK(is_clique(g, std::vector<int>{}));
  CHECK_FALSE(is_clique(g, std::vector<int>{0, 1, 3}));
}

TEST_CASE("random graphs agree with subset enumeration") {
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    CAPTURE(seed);
    const double p = seed % 5 == 0 ? 0.8 : 0.5;
    const UndirectedGraph g = random_graph(14, p, seed);
    const auto all = oracle::all_maximum_cliques(g);
    REQUIRE(!all.empty());
    const std::vector<int> got = max_clique(g);
    CHECK(is_clique(g, got));
    CHECK(got.size() == all.front().size());
    // enumeration lists cliques in lexicographic order
    CHECK(got == *std::min_element(all.begin(), all.end()));
  }
}

TEST_CASE("cost tie-break matches the cheapest enumerated clique") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint32_t seed = 100; seed < 130; ++seed) {
    CAPTURE(seed);
    const UndirectedGraph g = random_graph(16, 0.45, seed);
    std::vector<double> cost(16);
    for (double& c : cost) c = u(rng);
    const auto all = oracle::all_maximum_cliques(g);
    const auto total = [&](const std::vector<int>& c) {
      double s = 0;
      for (int v : c) s += cost[static_cast<std::size_t>(v)];
      return s;
    };
    const auto best = *std::min_element(all.begin(), all.end(), [&](const auto& a, const auto& b) {
      if (total(a) != total(b)) return total(a) < total(b);
      return a < b;
    });
    CHECK(max_clique(g, cost) == best);
  }
}

TEST_CASE("larger sparse graph with a planted clique") {
  UndirectedGraph g = random_graph(200, 0.05, 77);
  const std::vector<int> planted = {3, 17, 40, 41, 88, 120, 150, 199};
  for (int a : planted) {
    for (int b : planted) {
      if (a < b) g.add_edge(a, b);
    }
  }
  CHECK(max_clique(g) == planted);
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.h"
#include "partmatch/clique_matcher.h"
#include "partmatch/random.h"
#include "partmatch/synthetic.h"
#include "test_util.h"

using namespace partmatch;

namespace {

using PairKey = std::tuple<int, int, int, int>;

std::multiset<PairKey> keys(const MatchSet& m) {
  std::multiset<PairKey> out;
  for (const MatchPair& p : m.pairs) out.insert({p.src.row, p.src.col, p.dst.row, p.dst.col});
  return out;
}

void check_one_to_one(const MatchSet& m) {
  std::set<std::pair<int, int>> src, dst;
  for (const MatchPair& p : m.pairs) {
    CHECK(src.insert({p.src.row, p.src.col}).second);
    CHECK(dst.insert({p.dst.row, p.dst.col}).second);
  }
}

// Grid with random unit vectors in the top-left block and dead cells
// elsewhere, so its content can be shifted without wrapping.
FeatureGrid block_grid(int rows, int cols, int block, int dim, std::uint64_t seed) {
  FeatureGrid g(rows, cols, dim, 16.0f);
  Rng rng(seed);
  for (int i = 0; i < block; ++i) {
    for (int j = 0; j < block; ++j) random_unit_vector(rng, g.cell(i, j));
  }
  return g;
}

FeatureGrid shifted(const FeatureGrid& g, int dr, int dc) {
  FeatureGrid out(g.rows(), g.cols(), g.dim(), g.stride());
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) {
      if (i + dr < 0 || i + dr >= g.rows() || j + dc < 0 || j + dc >= g.cols()) continue;
      const auto src = g.cell(i, j);
      std::copy(src.begin(), src.end(), out.cell(i + dr, j + dc).begin());
    }
  }
  return out;
}

FeatureGrid add_noise(const FeatureGrid& g, double sigma, std::uint64_t seed) {
  FeatureGrid out = g;
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (int c = 0; c < out.num_cells(); ++c) {
    if (out.is_dead(c)) continue;
    for (float& v : out.cell(c)) v = static_cast<float>(v + n(rng));
  }
  return normalize(out).grid;
}

double precision(const MatchSet& m, const FeatureGrid& ga, const FeatureGrid& gb,
                 const std::vector<std::pair<int, int>>& truth) {
  const std::set<std::pair<int, int>> t(truth.begin(), truth.end());
  int good = 0;
  for (const MatchPair& p : m.pairs) {
    good += t.count({ga.index_of(p.src.row, p.src.col), gb.index_of(p.dst.row, p.dst.col)}) ? 1 : 0;
  }
  return m.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(m.size());
}

}  // namespace

TEST_CASE("config validation") {
  MatchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.xi = 2.5;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.zeta = 0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.max_candidates = 0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidArgument);
}

TEST_CASE("orthogonal grids with xi = 1 pair only along the diagonal") {
  const FeatureGrid a = oracle::basis_grid(3, 3, 9);
  MatchConfig cfg;
  cfg.xi = 1.0;
  const auto c = candidate_pairs(a, a, cfg);
  REQUIRE(c.size() == 9);
  for (int i = 0; i < 9; ++i) {
    CHECK(c[i].src == i);
    CHECK(c[i].dst == i);
    CHECK(c[i].dist == 0.0);
  }
}

TEST_CASE("xi = 0 pairs only bit-identical vectors") {
  FeatureGrid a = oracle::random_grid(2, 2, 8, 5);
  FeatureGrid b = a;
  b.cell(1)[0] = std::nextafter(b.cell(1)[0], 2.0f);
  MatchConfig cfg;
  cfg.xi = 0.0;
  const auto c = candidate_pairs(a, b, cfg);
  std::set<std::pair<int, int>> got;
  for (const auto& p : c) got.insert({p.src, p.dst});
  CHECK(got == std::set<std::pair<int, int>>{{0, 0}, {2, 2}, {3, 3}});
}

TEST_CASE("candidate filter equals the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    // dim 4 keeps plenty of pairs under 0.9
    const FeatureGrid a = oracle::random_grid(6, 6, 4, 2 * seed);
    const FeatureGrid b = oracle::random_grid(6, 6, 4, 2 * seed + 1);
    MatchConfig cfg;
    cfg.max_candidates = 36 * 36;
    const auto c = candidate_pairs(a, b, cfg);
    std::set<std::pair<int, int>> got;
    for (std::size_t i = 0; i < c.size(); ++i) {
      got.insert({c[i].src, c[i].dst});
      if (i > 0) CHECK(c[i - 1].dist <= c[i].dist);
    }
    CHECK(got.size() == c.size());
    CHECK(got == oracle::all_pairs_within(a, b, 0.9));

    cfg.max_candidates = 10;
    const auto capped = candidate_pairs(a, b, cfg);
    CHECK(capped.size() == std::min<std::size_t>(10, c.size()));
    for (std::size_t i = 0; i < capped.size(); ++i) CHECK(capped[i] == c[i]);
  }
}

TEST_CASE("candidate filter skips dead cells and checks dims") {
  FeatureGrid a(1, 2, 3, 16.0f);
  a.cell(1)[0] = 1.0f;
  FeatureGrid b = a;
  MatchConfig cfg;
  const auto c = candidate_pairs(a, b, cfg);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == CandidatePair{1, 1, 0.0});
  CHECK_ERROR_CODE(candidate_pairs(a, FeatureGrid(1, 2, 4, 16.0f), cfg), ErrorCode::kDimMismatch);
}

TEST_CASE("rigid translation gives a complete consistency graph") {
  const FeatureGrid a = block_grid(8, 8, 5, 32, 1);
  const FeatureGrid b = shifted(a, 2, 3);
  std::vector<CandidatePair> cands;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) cands.push_back({a.index_of(i, j), b.index_of(i + 2, j + 3), 0.0});
  }
  const UndirectedGraph g = consistency_graph(cands, a, b, MatchConfig{});
  CHECK(g.num_edges() == cands.size() * (cands.size() - 1) / 2);
}

TEST_CASE("candidates sharing a cell are never adjacent") {
  const FeatureGrid a = oracle::random_grid(4, 4, 4, 3);
  const std::vector<CandidatePair> cands = {{0, 0, 0.1}, {0, 1, 0.2}, {2, 1, 0.3}, {5, 6, 0.4}};
  MatchConfig cfg;
  cfg.zeta = 1e6;
  const UndirectedGraph g = consistency_graph(cands, a, a, cfg);
  CHECK_FALSE(g.adjacent(0, 1));  // same source
  CHECK_FALSE(g.adjacent(1, 2));  // same target
  CHECK(g.adjacent(0, 2));
  CHECK(g.adjacent(0, 3));
}

TEST_CASE("consistency graph equals the quadruple oracle") {
  const FeatureGrid a = oracle::random_grid(7, 7, 4, 11);
  const FeatureGrid b = oracle::random_grid(7, 7, 4, 12, 8.0f);
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> cell(0, 48);
  for (int round = 0; round < 5; ++round) {
    std::vector<CandidatePair> cands;
    for (int i = 0; i < 20; ++i) cands.push_back({cell(rng), cell(rng), 0.0});
    MatchConfig cfg;
    cfg.zeta = 16.0 + 8.0 * round;
    const UndirectedGraph g = consistency_graph(cands, a, b, cfg);
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        if (i == j) continue;
        CHECK(g.adjacent(i, j) ==
              oracle::quadruple_consistent(cands[i].src, cands[i].dst, cands[j].src, cands[j].dst, a, b,
                                           cfg.zeta));
      }
    }
  }
}

TEST_CASE("grid matched to itself gives the identity") {
  FeatureGrid a = oracle::basis_grid(4, 4, 16);
  a.mutable_meta().image_id = "self";
  const MatchSet m = match_images(a, a, MatchConfig{});
  CHECK(m.source_id == "self");
  CHECK(m.target_id == "self");
  REQUIRE(m.size() == 16);
  for (const MatchPair& p : m.pairs) {
    CHECK(p.src == p.dst);
    CHECK(p.src_px == p.dst_px);
    CHECK(p.dist == 0.0);
  }
  CHECK(matching_loss(m, a, a, MatchConfig{}) == 0.0);
}

TEST_CASE("no candidates under xi gives an empty match set") {
  const FeatureGrid a = oracle::basis_grid(2, 2, 8);
  FeatureGrid b(2, 2, 8, 16.0f);
  for (int c = 0; c < 4; ++c) b.cell(c)[4 + c] = 1.0f;
  const MatchSet m = match_images(a, b, MatchConfig{});
  CHECK(m.empty());
  CHECK(matching_loss(m, a, b, MatchConfig{}) == 0.0);
}

TEST_CASE("matching loss hand computations") {
  FeatureGrid a(2, 2, 2, 16.0f);
  FeatureGrid b(2, 2, 2, 16.0f);
  a.cell(0)[0] = 1.0f;                     // (1, 0)
  b.cell(0)[1] = 1.0f;                     // (0, 1): distance sqrt(2)
  a.cell(1)[0] = 1.0f;                     // (1, 0)
  b.cell(3)[0] = 0.6f, b.cell(3)[1] = 0.8f;  // distance^2 = 0.16 + 0.64
  a.cell(2)[1] = 1.0f;
  b.cell(2)[1] = 1.0f;  // identical

  MatchConfig cfg;
  SUBCASE("single pair") {
    MatchSet m;
    m.pairs.push_back({{0, 0}, {0, 0}, {8, 8}, {8, 8}, 0});
    CHECK(matching_loss(m, a, b, cfg) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("three pairs") {
    MatchSet m;
    m.pairs.push_back({{0, 0}, {0, 0}, {8, 8}, {8, 8}, 0});
    m.pairs.push_back({{0, 1}, {1, 1}, {24, 8}, {24, 24}, 0});
    m.pairs.push_back({{1, 0}, {1, 0}, {8, 24}, {10, 20}, 0});
    cfg.lambda1 = 2.0;
    cfg.lambda2 = 0.5;
    // appearance: 2 + 0.8 + 0
    // pair (0,1): du = (-16, 0), du' = (-16, -16), diff (0, 16) -> 256
    // pair (0,2): du = (0, -16), du' = (-2, -12), diff (2, -4) -> 20
    // pair (1,2): du = (16, -16), du' = (14, 4), diff (2, -20) -> 404
    const double expected = 2.0 * (2.0 + 0.8) + 0.5 * (256 + 20 + 404);
    CHECK(matching_loss(m, a, b, cfg) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("translation invariance") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureGrid a = add_noise(block_grid(10, 10, 6, 32, seed), 0.05, seed + 50);
    const FeatureGrid b = add_noise(a, 0.05, seed + 100);
    const MatchSet base = match_images(a, b, MatchConfig{});
    const MatchSet moved = match_images(a, shifted(b, 3, 2), MatchConfig{});
    std::multiset<PairKey> expected;
    for (const auto& [r, c, rr, cc] : keys(base)) expected.insert({r, c, rr + 3, cc + 2});
    CHECK(keys(moved) == expected);
    CHECK(base.size() == 36);
  }
}

TEST_CASE("synthetic pair at 40 and 45 degrees") {
  const SyntheticScene scene{SceneConfig{}};
  Viewpoint va = scene.config().camera;
  Viewpoint vb = va;
  va.azimuth = 40;
  vb.azimuth = 45;
  const SynthImage a = synth_feature_grid(scene, va, 0.05, 1, "a");
  const SynthImage b = synth_feature_grid(scene, vb, 0.05, 2, "b");
  const MatchConfig cfg;
  const MatchSet ab = match_images(a.coarse, b.coarse, &a.fine, &b.fine, cfg);
  REQUIRE(ab.size() >= 10);
  CHECK(precision(ab, a.coarse, b.coarse, ground_truth_pairs(a, b)) >= 0.95);
  check_one_to_one(ab);

  // the returned set is a maximum clique of its consistency graph
  const auto cands = candidate_pairs(a.coarse, b.coarse, cfg);
  const UndirectedGraph g = consistency_graph(cands, a.coarse, b.coarse, cfg);
  CHECK(max_clique(g).size() == ab.size());

  SUBCASE("symmetry") {
    const MatchSet ba = match_images(b.coarse, a.coarse, cfg);
    const MatchSet ab_coarse = match_images(a.coarse, b.coarse, cfg);
    std::multiset<PairKey> mirrored;
    for (const auto& [r, c, rr, cc] : keys(ba)) mirrored.insert({rr, cc, r, c});
    CHECK(mirrored == keys(ab_coarse));
  }

  SUBCASE("refinement stays within one coarse stride and keeps one-to-one") {
    const MatchSet coarse = match_images(a.coarse, b.coarse, cfg);
    REQUIRE(coarse.size() == ab.size());
    std::set<std::pair<double, double>> src_px, dst_px;
    for (std::size_t i = 0; i < ab.size(); ++i) {
      CHECK(ab.pairs[i].src == coarse.pairs[i].src);
      const Vec2 ds = ab.pairs[i].src_px - coarse.pairs[i].src_px;
      const Vec2 dd = ab.pairs[i].dst_px - coarse.pairs[i].dst_px;
      CHECK(ds.cwiseAbs().maxCoeff() <= 16.0);
      CHECK(dd.cwiseAbs().maxCoeff() <= 16.0);
      CHECK(src_px.insert({ab.pairs[i].src_px.x(), ab.pairs[i].src_px.y()}).second);
      CHECK(dst_px.insert({ab.pairs[i].dst_px.x(), ab.pairs[i].dst_px.y()}).second);
    }
  }
}

TEST_CASE("returned set beats any single swap for a rejected candidate") {
  const FeatureGrid a = add_noise(block_grid(9, 9, 6, 32, 4), 0.05, 5);
  FeatureGrid b = add_noise(shifted(a, 1, 2), 0.05, 6);
  // a few look-alike distractors
  for (int k = 0; k < 4; ++k) {
    const auto src = a.cell(k, k);
    std::copy(src.begin(), src.end(), b.cell(8, 8 - k).begin());
  }
  b = add_noise(b, 0.05, 7);
  MatchConfig cfg;
  const MatchSet m = match_images(a, b, cfg);
  const double loss = matching_loss(m, a, b, cfg);
  std::set<std::pair<int, int>> used;
  for (const MatchPair& p : m.pairs) used.insert({a.index_of(p.src.row, p.src.col), b.index_of(p.dst.row, p.dst.col)});
  int swaps = 0;
  for (const CandidatePair& c : candidate_pairs(a, b, cfg)) {
    if (used.count({c.src, c.dst})) continue;
    for (std::size_t i = 0; i < m.size(); ++i) {
      MatchSet alt = m;
      alt.pairs[i] = {a.cell_of(c.src), b.cell_of(c.dst), a.cell_center(c.src), b.cell_center(c.dst), c.dist};
      CHECK(matching_loss(alt, a, b, cfg) >= loss);
      ++swaps;
    }
  }
  CHECK(swaps > 0);
}

TEST_CASE("match set JSON round trip") {
  const FeatureGrid a = add_noise(block_grid(6, 6, 4, 32, 8), 0.05, 9);
  MatchSet m = match_images(a, a, MatchConfig{});
  m.source_id = "s";
  m.target_id = "t";
  const MatchSet back = match_set_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.source_id == "s");
  CHECK(back.target_id == "t");
  REQUIRE(back.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(back.pairs[i].src == m.pairs[i].src);
    CHECK(back.pairs[i].dst == m.pairs[i].dst);
    CHECK(back.pairs[i].src_px == m.pairs[i].src_px);
    CHECK(back.pairs[i].dst_px == m.pairs[i].dst_px);
    CHECK(back.pairs[i].dist == m.pairs[i].dist);
  }
  CHECK_ERROR_CODE(match_set_from_json(nlohmann::json::parse(R"({"source_id":"a","pairs":[]})")),
                   ErrorCode::kSchema);
}

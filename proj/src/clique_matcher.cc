#include "partmatch/clique_matcher.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.h"
#include "partmatch/error.h"

namespace partmatch {

void MatchConfig::validate() const {
  if (!(xi > 0.0 && xi <= 2.0)) throw Error(ErrorCode::kInvalidArgument, "xi must lie in (0, 2]");
  if (!(zeta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "zeta must be > 0");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "matching loss weights must be >= 0");
  }
  if (max_candidates < 1) throw Error(ErrorCode::kInvalidArgument, "max_candidates must be >= 1");
}

double descriptor_distance(std::span<const float> a, std::span<const float> b) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

namespace {

void check_dims(const FeatureGrid& a, const FeatureGrid& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch, "descriptor dims differ: " + std::to_string(a.dim()) +
                                             " vs " + std::to_string(b.dim()));
  }
}

// Candidate filtering that also accepts xi == 0 (exact duplicates only).
std::vector<CandidatePair> filter_pairs(const FeatureGrid& a, const FeatureGrid& b, double xi,
                                        int max_candidates) {
  check_dims(a, b);
  std::vector<bool> b_dead(static_cast<std::size_t>(b.num_cells()));
  for (int l = 0; l < b.num_cells(); ++l) b_dead[l] = b.is_dead(l);
  std::vector<CandidatePair> out;
  for (int l = 0; l < a.num_cells(); ++l) {
    if (a.is_dead(l)) continue;
    const auto va = a.cell(l);
    for (int lp = 0; lp < b.num_cells(); ++lp) {
      if (b_dead[lp]) continue;
      const double d = descriptor_distance(va, b.cell(lp));
      if (d <= xi) out.push_back({l, lp, d});
    }
  }
  std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    if (x.dist != y.dist) return x.dist < y.dist;
    if (x.src != y.src) return x.src < y.src;
    return x.dst < y.dst;
  });
  if (out.size() > static_cast<std::size_t>(max_candidates)) out.resize(max_candidates);
  return out;
}

struct FineBlock {
  int row_lo, row_hi, col_lo, col_hi;  // inclusive
};

// Fine cells under a coarse cell's footprint plus a one-cell ring.
FineBlock fine_block(const CellIndex& coarse, float coarse_stride, const FeatureGrid& fine) {
  const double ratio = static_cast<double>(coarse_stride) / fine.stride();
  const auto span = [ratio](int index) {
    const int first = static_cast<int>(std::floor(index * ratio));
    const int last = static_cast<int>(std::ceil((index + 1) * ratio)) - 1;
    return std::pair{first - 1, last + 1};
  };
  const auto [row_lo, row_hi] = span(coarse.row);
  const auto [col_lo, col_hi] = span(coarse.col);
  return {std::max(row_lo, 0), std::min(row_hi, fine.rows() - 1), std::max(col_lo, 0),
          std::min(col_hi, fine.cols() - 1)};
}

void refine(MatchSet& m, const FeatureGrid& a, const FeatureGrid& b, const FeatureGrid& fine_a,
            const FeatureGrid& fine_b, double xi) {
  check_dims(fine_a, fine_b);
  std::vector<bool> used_a(static_cast<std::size_t>(fine_a.num_cells()), false);
  std::vector<bool> used_b(static_cast<std::size_t>(fine_b.num_cells()), false);
  for (MatchPair& pair : m.pairs) {
    const FineBlock ba = fine_block(pair.src, a.stride(), fine_a);
    const FineBlock bb = fine_block(pair.dst, b.stride(), fine_b);
    double best = std::numeric_limits<double>::infinity();
    int best_a = -1;
    int best_b = -1;
    for (int ra = ba.row_lo; ra <= ba.row_hi; ++ra) {
      for (int ca = ba.col_lo; ca <= ba.col_hi; ++ca) {
        const int la = fine_a.index_of(ra, ca);
        if (used_a[la] || fine_a.is_dead(la)) continue;
        const auto va = fine_a.cell(la);
        for (int rb = bb.row_lo; rb <= bb.row_hi; ++rb) {
          for (int cb = bb.col_lo; cb <= bb.col_hi; ++cb) {
            const int lb = fine_b.index_of(rb, cb);
            if (used_b[lb] || fine_b.is_dead(lb)) continue;
            const double d = descriptor_distance(va, fine_b.cell(lb));
            if (d < best) {
              best = d;
              best_a = la;
              best_b = lb;
            }
          }
        }
      }
    }
    // Only re-localize when the fine levels agree on appearance too.
    if (best_a < 0 || best > xi) continue;
    used_a[best_a] = true;
    used_b[best_b] = true;
    pair.src_px = fine_a.cell_center(best_a);
    pair.dst_px = fine_b.cell_center(best_b);
  }
}

}  // namespace

std::vector<CandidatePair> candidate_pairs(const FeatureGrid& a, const FeatureGrid& b,
                                           const MatchConfig& cfg) {
  // xi == 0 is outside the validated range but is a meaningful probe
  // (bit-identical vectors only), so only the remaining fields are checked.
  if (cfg.xi != 0.0) cfg.validate();
  return filter_pairs(a, b, cfg.xi, cfg.max_candidates);
}

UndirectedGraph consistency_graph(std::span<const CandidatePair> candidates, const FeatureGrid& a,
                                  const FeatureGrid& b, const MatchConfig& cfg) {
  const int n = static_cast<int>(candidates.size());
  UndirectedGraph g(n);
  std::vector<Vec2> ua(n);
  std::vector<Vec2> ub(n);
  for (int i = 0; i < n; ++i) {
    ua[i] = a.cell_center(candidates[i].src);
    ub[i] = b.cell_center(candidates[i].dst);
  }
  const double zeta2 = cfg.zeta * cfg.zeta;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (candidates[i].src == candidates[j].src || candidates[i].dst == candidates[j].dst) continue;
      const Vec2 diff = (ua[i] - ua[j]) - (ub[i] - ub[j]);
      if (diff.squaredNorm() <= zeta2) g.add_edge(i, j);
    }
  }
  return g;
}

MatchSet match_images(const FeatureGrid& a, const FeatureGrid& b, const FeatureGrid* fine_a,
                      const FeatureGrid* fine_b, const MatchConfig& cfg) {
  cfg.validate();
  MatchSet m;
  m.source_id = a.meta().image_id;
  m.target_id = b.meta().image_id;
  const auto candidates = candidate_pairs(a, b, cfg);
  if (candidates.empty()) return m;
  const UndirectedGraph graph = consistency_graph(candidates, a, b, cfg);
  std::vector<double> cost(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) cost[i] = candidates[i].dist;
  for (int node : max_clique(graph, cost)) {
    const CandidatePair& c = candidates[static_cast<std::size_t>(node)];
    MatchPair pair;
    pair.src = a.cell_of(c.src);
    pair.dst = b.cell_of(c.dst);
    pair.src_px = a.cell_center(c.src);
    pair.dst_px = b.cell_center(c.dst);
    pair.dist = c.dist;
    m.pairs.push_back(pair);
  }
  if (fine_a != nullptr && fine_b != nullptr) refine(m, a, b, *fine_a, *fine_b, cfg.xi);
  return m;
}

double matching_loss(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b,
                     const MatchConfig& cfg) {
  check_dims(a, b);
  double appearance = 0.0;
  for (const MatchPair& p : m.pairs) {
    const double d = descriptor_distance(a.cell(p.src.row, p.src.col), b.cell(p.dst.row, p.dst.col));
    appearance += d * d;
  }
  double spatial = 0.0;
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < m.pairs.size(); ++j) {
      const Vec2 du = m.pairs[i].src_px - m.pairs[j].src_px;
      const Vec2 dup = m.pairs[i].dst_px - m.pairs[j].dst_px;
      spatial += (du - dup).squaredNorm();
    }
  }
  return cfg.lambda1 * appearance + cfg.lambda2 * spatial;
}

nlohmann::json to_json(const MatchSet& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchPair& p : m.pairs) {
    pairs.push_back({{"src", {p.src.row, p.src.col}},
                     {"dst", {p.dst.row, p.dst.col}},
                     {"src_px", {p.src_px.x(), p.src_px.y()}},
                     {"dst_px", {p.dst_px.x(), p.dst_px.y()}},
                     {"dist", p.dist}});
  }
  return {{"source_id", m.source_id}, {"target_id", m.target_id}, {"pairs", std::move(pairs)}};
}

MatchSet match_set_from_json(const nlohmann::json& j) {
  constexpr std::string_view ctx = "match set";
  MatchSet m;
  m.source_id = detail::require_string(j, "source_id", ctx);
  m.target_id = detail::require_string(j, "target_id", ctx);
  const auto read2 = [](const nlohmann::json& pj, std::string_view key) {
    const auto& arr = detail::require_array(pj, key, "match pair", 2);
    if (!arr[0].is_number() || !arr[1].is_number()) {
      throw Error(ErrorCode::kSchema, "match pair: field '" + std::string(key) + "' must hold numbers");
    }
    return std::array<double, 2>{arr[0].get<double>(), arr[1].get<double>()};
  };
  for (const auto& pj : detail::require_array(j, "pairs", ctx)) {
    MatchPair p;
    const auto s = read2(pj, "src");
    const auto d = read2(pj, "dst");
    p.src = {static_cast<int>(s[0]), static_cast<int>(s[1])};
    p.dst = {static_cast<int>(d[0]), static_cast<int>(d[1])};
    const auto sp = read2(pj, "src_px");
    const auto dp = read2(pj, "dst_px");
    p.src_px = Vec2(sp[0], sp[1]);
    p.dst_px = Vec2(dp[0], dp[1]);
    p.dist = detail::require_number(pj, "dist", "match pair");
    m.pairs.push_back(p);
  }
  return m;
}

}  // namespace partmatch

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmatch/feature_grid.h"
#include "partmatch/max_clique.h"

namespace partmatch {

struct MatchConfig {
  double xi = 0.9;     // appearance distance threshold on unit vectors, (0, 2]
  double zeta = 32.0;  // displacement-consistency threshold in pixels
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  int max_candidates = 300;

  void validate() const;
};

// A candidate correspondence between cell `src` of grid a and cell `dst` of b.
struct CandidatePair {
  int src = 0;
  int dst = 0;
  double dist = 0.0;
  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

struct MatchPair {
  CellIndex src;
  CellIndex dst;
  Vec2 src_px = Vec2::Zero();  // refined when fine grids are supplied
  Vec2 dst_px = Vec2::Zero();
  double dist = 0.0;           // coarse appearance distance
};

// One-to-one cell matching between a source and a target grid.
struct MatchSet {
  std::string source_id;
  std::string target_id;
  std::vector<MatchPair> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
};

double descriptor_distance(std::span<const float> a, std::span<const float> b);

// All (l, l') with ||v_l - v'_l'|| <= xi, ascending by distance (ties by
// src then dst), truncated to max_candidates. All-zero cells never pair.
std::vector<CandidatePair> candidate_pairs(const FeatureGrid& a, const FeatureGrid& b,
                                           const MatchConfig& cfg);

// Edge between two candidates iff they share neither cell and their cell
// displacements agree within zeta.
UndirectedGraph consistency_graph(std::span<const CandidatePair> candidates,
                                  const FeatureGrid& a, const FeatureGrid& b,
                                  const MatchConfig& cfg);

// Appearance filter, consistency graph, maximum clique, then optional
// re-localization of each pair on the fine grids.
MatchSet match_images(const FeatureGrid& a, const FeatureGrid& b,
                      const FeatureGrid* fine_a, const FeatureGrid* fine_b,
                      const MatchConfig& cfg);

inline MatchSet match_images(const FeatureGrid& a, const FeatureGrid& b, const MatchConfig& cfg) {
  return match_images(a, b, nullptr, nullptr, cfg);
}

// lambda1 * sum ||v - v'||^2 + lambda2 * sum_{w1<w2} ||du - du'||^2 using
// the pair pixel coordinates.
double matching_loss(const MatchSet& m, const FeatureGrid& a, const FeatureGrid& b,
                     const MatchConfig& cfg);

nlohmann::json to_json(const MatchSet& m);
MatchSet match_set_from_json(const nlohmann::json& j);

}  // namespace partmatch

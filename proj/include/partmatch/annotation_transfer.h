#pragma once

#include <string>
#include <vector>

#include "partmatch/clique_matcher.h"
#include "partmatch/feature_grid.h"

namespace partmatch {

inline constexpr int kDefaultTransferNeighbors = 3;
// Floor on the point-to-feature distance in the inverse-distance weights.
inline constexpr double kTransferDistanceFloor = 1e-6;

struct TransferSupport {
  int pair_index = 0;  // index into MatchSet::pairs
  double weight = 0.0;
};

struct TransferResult {
  Vec2 point = Vec2::Zero();
  std::vector<TransferSupport> support;  // weights positive, summing to 1
};

// Moves p from the match set's source frame to its target frame by the
// inverse-distance-weighted mean translation of the k source-nearest
// pairs (ties by pair index). Throws kNoSupport on an empty match set.
TransferResult transfer_point_with_support(const Vec2& p, const MatchSet& m,
                                           int k = kDefaultTransferNeighbors);
Vec2 transfer_point(const Vec2& p, const MatchSet& m, int k = kDefaultTransferNeighbors);

struct TransferredAnnotation {
  int part_id = 0;
  Box box;
  std::vector<TransferSupport> support;
  std::string source_image_id;
};

// Box center moved by transfer_point; width, height and part_id kept.
TransferredAnnotation transfer_box(const PartAnnotation& ann, const MatchSet& m,
                                   int k = kDefaultTransferNeighbors);

}  // namespace partmatch

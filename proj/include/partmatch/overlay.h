#pragma once

#include <span>
#include <string>

#include "partmatch/box.h"
#include "partmatch/clique_matcher.h"
#include "partmatch/feature_grid.h"

namespace partmatch {

struct OverlayBox {
  Box box;
  std::string label;
};

// Two panels side by side (left = match source, right = match target), one
// line per match, detection boxes in red and ground truth in green on the
// right panel. Element order follows the inputs.
std::string emit_overlay_svg(const GridMeta& left, const GridMeta& right,
                             std::span<const MatchPair> matches,
                             std::span<const OverlayBox> detections,
                             std::span<const OverlayBox> truths);

}  // namespace partmatch

#pragma once

#include <functional>
#include <optional>

#include "partmatch/feature_grid.h"

namespace partmatch {

// Feature grids of the 3D model seen from one viewpoint.
struct ReferenceView {
  FeatureGrid coarse;
  std::optional<FeatureGrid> fine;
};

// Stand-in for the rendering function: viewpoint -> reference grids.
using ReferenceRenderer = std::function<ReferenceView(const Viewpoint&)>;

}  // namespace partmatch

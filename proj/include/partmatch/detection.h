#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmatch/annotation_transfer.h"
#include "partmatch/clique_matcher.h"
#include "partmatch/feature_grid.h"
#include "partmatch/geometry3d.h"
#include "partmatch/part_model3d.h"
#include "partmatch/reference_renderer.h"
#include "partmatch/viewpoint_search.h"

namespace partmatch {

struct Detection {
  std::string image_id;
  int part_id = 0;
  int instance = 0;  // index into PartModel3D::parts
  Box box;
  double score = 0.0;
  std::vector<int> support;  // supporting pair indices in the match set

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectConfig {
  MatchConfig match;
  ViewpointEnergyConfig viewpoint;
  int transfer_neighbors = kDefaultTransferNeighbors;
  // Elevation, distance and intrinsics used when the viewpoint is predicted.
  Viewpoint reference_camera;
};

struct DetectionResult {
  std::vector<Detection> detections;
  Viewpoint viewpoint;
  std::optional<ViewpointPrediction> prediction;
  MatchSet matches;  // reference -> test
};

// Score in [0, 1]: mean of (1 - dist / 2) over the supporting pairs.
double support_score(const MatchSet& m, std::span<const TransferSupport> support);

// Renders the reference at the viewpoint (predicted when `viewpoint` is
// empty), matches reference -> test and transfers each visible learned part
// onto the test image. Detections come sorted by descending score, then
// part_id and instance.
DetectionResult detect(const FeatureGrid& test, const FeatureGrid* test_fine,
                       const PartModel3D& model, const Mesh3D& mesh,
                       const ReferenceRenderer& renderer, std::optional<Viewpoint> viewpoint,
                       const DetectConfig& cfg, int jobs = 1);

nlohmann::json detections_to_json(std::span<const Detection> detections);
std::vector<Detection> detections_from_json(const nlohmann::json& j);
void write_detections(std::span<const Detection> detections, const std::filesystem::path& path);
std::vector<Detection> read_detections(const std::filesystem::path& path);

}  // namespace partmatch

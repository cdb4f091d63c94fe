#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partmatch/annotation_transfer.h"
#include "partmatch/clique_matcher.h"
#include "partmatch/feature_grid.h"
#include "partmatch/geometry3d.h"
#include "partmatch/part_model3d.h"
#include "partmatch/reference_renderer.h"

namespace partmatch {

struct ConsistencyConfig {
  double lambda3 = 1.0;
  // Cost per retained part. About one image diagonal, so a cluster is only
  // worth keeping when it explains at least one annotation better than the
  // alternative placement would.
  double lambda4 = 320.0;
  // K-means centers per part id; 0 enumerates K, see select_clusters.
  int clusters_per_part = 1;
  int min_support = 2;
  // Cost of an annotation whose part_id has no learned part; defaults to
  // the image diagonal of the view it belongs to.
  std::optional<double> unknown_part_penalty;
  std::uint64_t seed = 42;

  void validate() const;
};

// The visible vertex whose projection is nearest to center; ties go to the
// lowest index. Throws kNoVisibleVertex when nothing is visible.
int back_project(const Vec2& center, const Mesh3D& mesh, const Viewpoint& vp);
// Same, with visibility precomputed by visible_vertices(mesh, vp).
int back_project(const Vec2& center, const Mesh3D& mesh, const Viewpoint& vp,
                 const std::vector<bool>& visible);

// One back-projected annotation; box size already at the reference scale.
struct PartSample {
  int part_id = 0;
  int vertex = 0;
  double box_width = 0.0;
  double box_height = 0.0;
};

struct ClusterInfo {
  int part_id = 0;
  Vec3 center = Vec3::Zero();  // K-means mean before snapping
  int members = 0;
  bool kept = false;
  int vertex = -1;  // snapped vertex, -1 when dropped
};

struct ClusterResult {
  PartModel3D model;
  std::vector<ClusterInfo> clusters;  // by part_id, then cluster index
};

// Per part_id K-means on the 3D positions of the sample vertices, then
// min_support filtering and snapping to the nearest mesh vertex. Clusters
// that snap to the same vertex are merged.
ClusterResult cluster_parts_detailed(std::span<const PartSample> samples, const Mesh3D& mesh,
                                     const ConsistencyConfig& cfg);
PartModel3D cluster_parts(std::span<const PartSample> samples, const Mesh3D& mesh,
                          const ConsistencyConfig& cfg);

// Annotations of one image, expressed in the frame of the model rendered at
// `viewpoint`.
struct ViewAnnotations {
  Viewpoint viewpoint;
  std::vector<PartAnnotation> annotations;
};

inline constexpr int kMaxEnumeratedClusters = 8;

// cluster_parts_detailed with a fixed K, or with clusters_per_part == 0 the
// per-part K in 1..min(8, samples) whose model has the lowest consistency
// loss on that part's views. Ties keep the smaller K.
ClusterResult select_clusters(std::span<const PartSample> samples, std::span<const ViewAnnotations> views,
                              const Mesh3D& mesh, const ConsistencyConfig& cfg);

// lambda3 * sum of distances from each annotation center to the nearest
// same-ID part projection, plus lambda4 * |parts|.
double consistency_loss(std::span<const ViewAnnotations> views, const PartModel3D& model,
                        const Mesh3D& mesh, const ConsistencyConfig& cfg);

struct MatchTerm {
  const MatchSet* matches = nullptr;
  const FeatureGrid* source = nullptr;
  const FeatureGrid* target = nullptr;
};

double overall_loss(std::span<const MatchTerm> matches, std::span<const ViewAnnotations> views,
                    const PartModel3D& model, const Mesh3D& mesh, const MatchConfig& match_cfg,
                    const ConsistencyConfig& cfg);

struct TrainingImage {
  FeatureGrid coarse;
  std::optional<FeatureGrid> fine;
  std::vector<PartAnnotation> annotations;
  Viewpoint viewpoint;
};

struct TrainOptions {
  MatchConfig match;
  ConsistencyConfig consistency;
  int transfer_neighbors = kDefaultTransferNeighbors;
  std::string mesh_id = "mesh";
  // Pixels per model unit that learned box sizes refer to.
  double reference_scale = 200.0;
  int jobs = 1;
};

struct TrainResult {
  PartModel3D model;
  std::vector<ClusterInfo> clusters;
  std::vector<PartSample> samples;
  // Per used image, in input order.
  std::vector<int> used_images;
  std::vector<ViewAnnotations> transferred;
  std::vector<double> matching_losses;
  std::vector<int> skipped_images;
};

// Renders the reference at each image's viewpoint, matches image ->
// reference, transfers and back-projects the annotations, then clusters.
TrainResult train(std::span<const TrainingImage> images, const Mesh3D& mesh,
                  const ReferenceRenderer& renderer, const TrainOptions& options);

}  // namespace partmatch

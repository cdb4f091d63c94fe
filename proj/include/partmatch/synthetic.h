#pragma once

// Procedural stand-in for rendered images and CNN features: a subdivided
// box proxy with designated part vertices, and a feature emitter that splats
// fixed per-vertex descriptors into grids with known correspondences.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmatch/feature_grid.h"
#include "partmatch/geometry3d.h"
#include "partmatch/reference_renderer.h"

namespace partmatch {

struct ProxySpec {
  std::string template_name = "box-car";
  // Relative proportions; zero selects the template default. The mesh is
  // rescaled to unit bounding-box diagonal either way.
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  // Target lattice spacing in normalized model units.
  double spacing = 0.07;
};

struct PartDefinition {
  int part_id = 0;
  std::string name;
  int vertex = 0;
};

struct ProxyModel {
  Mesh3D mesh;
  std::vector<PartDefinition> parts;
};

std::vector<std::string> proxy_templates();
ProxyModel make_proxy_mesh(const ProxySpec& spec);

struct GridShape {
  int rows = 14;
  int cols = 14;
  int dim = 64;
  float stride = 16.0f;
};

struct SceneConfig {
  ProxySpec proxy;
  GridShape coarse{14, 14, 64, 16.0f};
  GridShape fine{28, 28, 64, 8.0f};
  // Camera used for references and as the default for generated images.
  Viewpoint camera{0.0, 0.0, 3.0, 600.0, 224, 224};
  // Ground-truth box side in pixels at the reference camera scale.
  double part_box_size = 40.0;
  std::uint64_t seed = 42;
};

nlohmann::json to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const nlohmann::json& j);

class SyntheticScene {
 public:
  explicit SyntheticScene(SceneConfig cfg);

  const SceneConfig& config() const { return cfg_; }
  const Mesh3D& mesh() const { return proxy_.mesh; }
  const std::vector<PartDefinition>& parts() const { return proxy_.parts; }
  int num_parts() const { return static_cast<int>(proxy_.parts.size()); }
  double reference_scale() const { return cfg_.camera.scale(); }

  // Unit descriptor of a vertex at the coarse or fine level.
  std::span<const float> descriptor(int vertex, bool fine = false) const;

 private:
  SceneConfig cfg_;
  ProxyModel proxy_;
  std::vector<float> coarse_table_;
  std::vector<float> fine_table_;
};

struct CellTruth {
  int vertex = 0;
  Vec2 pixel = Vec2::Zero();  // exact sub-cell projection of the vertex
};

struct SynthImage {
  FeatureGrid coarse;
  FeatureGrid fine;
  // Occupied cell index -> splatted vertex, per level.
  std::map<int, CellTruth> coarse_truth;
  std::map<int, CellTruth> fine_truth;
  std::vector<PartAnnotation> annotations;
  Viewpoint viewpoint;
};

// Renders one image: each visible vertex's descriptor goes into the cell
// containing its projection (nearest-to-center wins, then lower vertex
// index), empty cells get seeded background vectors, then additive
// Gaussian noise and re-normalization.
SynthImage synth_feature_grid(const SyntheticScene& scene, const Viewpoint& vp, double sigma,
                              std::uint64_t seed, const std::string& image_id = "synthetic");

// Noise-free rendering with a fixed background seed, the toolkit's
// rendering function for references.
ReferenceRenderer make_reference_renderer(const SyntheticScene& scene);

// Ground-truth cell correspondences between two synthetic images: pairs of
// coarse cells holding the same vertex.
std::vector<std::pair<int, int>> ground_truth_pairs(const SynthImage& a, const SynthImage& b);

struct SplitSpec {
  std::string name;
  int per_bin = 2;
  double elevation = 0.0;
};

struct DatasetSpec {
  int bins = 8;
  double sigma = 0.05;
  double jitter = 10.0;  // uniform azimuth jitter in degrees around each bin center
  std::vector<SplitSpec> splits{{"train", 2, 0.0}, {"test", 4, 0.0}, {"novel", 4, 20.0}};
  std::uint64_t seed = 42;
};

double bin_center(int bin, int bins);

// Images of one split in bin-major order with per-image derived seeds.
std::vector<SynthImage> synth_split(const SyntheticScene& scene, const DatasetSpec& spec,
                                    const SplitSpec& split);

struct CorpusEntry {
  std::string id;
  std::filesystem::path grid;
  std::filesystem::path fine;
  std::filesystem::path annotations;
};

struct CorpusManifest {
  SceneConfig scene;
  int bins = 8;
  double sigma = 0.0;
  std::uint64_t dataset_seed = 42;
  std::map<std::string, std::vector<CorpusEntry>> splits;  // paths relative to the corpus dir
};

// Writes mesh.obj, <split>/<id>.fgrd, <id>.fine.fgrd, <id>.json and
// manifest.json under out_dir.
CorpusManifest synth_dataset(const SyntheticScene& scene, const DatasetSpec& spec,
                             const std::filesystem::path& out_dir);

nlohmann::json to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const nlohmann::json& j);
CorpusManifest read_manifest(const std::filesystem::path& corpus_dir);

}  // namespace partmatch

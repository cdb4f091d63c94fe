#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace partmatch {

// One learned semantic part instance anchored to a mesh vertex.
struct LearnedPart {
  int part_id = 0;
  int vertex = 0;
  // Mean box size (w, h) in pixels at the model's reference scale.
  double box_width = 0.0;
  double box_height = 0.0;
  int support = 1;

  friend bool operator==(const LearnedPart&, const LearnedPart&) = default;
};

// The learned part set: parts ordered by (part_id, descending support, vertex).
struct PartModel3D {
  std::string mesh_id;
  // Pixels per model unit at the object center that box sizes refer to.
  double reference_scale = 1.0;
  std::vector<LearnedPart> parts;

  std::vector<const LearnedPart*> parts_with_id(int part_id) const;

  friend bool operator==(const PartModel3D&, const PartModel3D&) = default;
};

nlohmann::json to_json(const PartModel3D& model);
PartModel3D part_model_from_json(const nlohmann::json& j);

void write_part_model(const PartModel3D& model, const std::filesystem::path& path);
PartModel3D read_part_model(const std::filesystem::path& path);

}  // namespace partmatch

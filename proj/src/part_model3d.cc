#include "partmatch/part_model3d.h"

#include "json_util.h"

namespace partmatch {

std::vector<const LearnedPart*> PartModel3D::parts_with_id(int part_id) const {
  std::vector<const LearnedPart*> out;
  for (const LearnedPart& p : parts) {
    if (p.part_id == part_id) out.push_back(&p);
  }
  return out;
}

nlohmann::json to_json(const PartModel3D& model) {
  nlohmann::json parts = nlohmann::json::array();
  for (const LearnedPart& p : model.parts) {
    parts.push_back({{"part_id", p.part_id},
                     {"vertex", p.vertex},
                     {"box", {p.box_width, p.box_height}},
                     {"support", p.support}});
  }
  return {{"mesh_id", model.mesh_id},
          {"reference_scale", model.reference_scale},
          {"parts", std::move(parts)}};
}

PartModel3D part_model_from_json(const nlohmann::json& j) {
  constexpr std::string_view ctx = "part model";
  PartModel3D model;
  model.mesh_id = detail::require_string(j, "mesh_id", ctx);
  if (j.contains("reference_scale")) {
    model.reference_scale = detail::require_number(j, "reference_scale", ctx);
    if (!(model.reference_scale > 0.0)) {
      throw Error(ErrorCode::kSchema, "part model: field 'reference_scale' must be > 0");
    }
  }
  for (const auto& pj : detail::require_array(j, "parts", ctx)) {
    constexpr std::string_view pctx = "part model part";
    LearnedPart p;
    p.part_id = detail::require_int(pj, "part_id", pctx);
    p.vertex = detail::require_int(pj, "vertex", pctx);
    const auto& box = detail::require_array(pj, "box", pctx, 2);
    if (!box[0].is_number() || !box[1].is_number()) {
      throw Error(ErrorCode::kSchema, "part model part: field 'box' must hold numbers");
    }
    p.box_width = box[0].get<double>();
    p.box_height = box[1].get<double>();
    p.support = detail::require_int(pj, "support", pctx);
    if (p.support < 1) {
      throw Error(ErrorCode::kSchema, "part model part: field 'support' must be >= 1");
    }
    model.parts.push_back(p);
  }
  return model;
}

void write_part_model(const PartModel3D& model, const std::filesystem::path& path) {
  detail::write_json_file(path, to_json(model));
}

PartModel3D read_part_model(const std::filesystem::path& path) {
  return detail::parse_json_file(path, [](const nlohmann::json& j) { return part_model_from_json(j); });
}

}  // namespace partmatch

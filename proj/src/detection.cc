#include "partmatch/detection.h"

#include <algorithm>

#include "json_util.h"
#include "partmatch/error.h"
#include "partmatch/log.h"

namespace partmatch {

double support_score(const MatchSet& m, std::span<const TransferSupport> support) {
  if (support.empty()) return 0.0;
  double sum = 0.0;
  for (const TransferSupport& s : support) {
    sum += 1.0 - m.pairs.at(static_cast<std::size_t>(s.pair_index)).dist / 2.0;
  }
  return std::clamp(sum / static_cast<double>(support.size()), 0.0, 1.0);
}

DetectionResult detect(const FeatureGrid& test, const FeatureGrid* test_fine,
                       const PartModel3D& model, const Mesh3D& mesh,
                       const ReferenceRenderer& renderer, std::optional<Viewpoint> viewpoint,
                       const DetectConfig& cfg, int jobs) {
  if (model.parts.empty()) throw Error(ErrorCode::kInvalidArgument, "part model has no parts");
  DetectionResult out;
  if (viewpoint) {
    out.viewpoint = viewpoint->validated();
  } else {
    out.prediction = predict_viewpoint(test, test_fine, renderer, cfg.reference_camera,
                                       cfg.viewpoint, cfg.match, jobs);
    out.viewpoint = out.prediction->viewpoint;
  }

  const ReferenceView ref = renderer(out.viewpoint);
  const bool refine = test_fine && ref.fine;
  out.matches = match_images(ref.coarse, test, refine ? &*ref.fine : nullptr,
                             refine ? test_fine : nullptr, cfg.match);
  out.matches.source_id = "reference";
  out.matches.target_id = test.meta().image_id;
  if (out.matches.empty()) {
    log_warn("no matches between '" + test.meta().image_id + "' and its reference; no detections");
    return out;
  }

  const double box_scale = out.viewpoint.scale() / model.reference_scale;
  for (const ProjectedPart& part : render_part_projections(model, mesh, out.viewpoint)) {
    if (!part.visible) continue;
    const LearnedPart& learned = model.parts[static_cast<std::size_t>(part.instance)];
    const TransferResult moved =
        transfer_point_with_support(part.center, out.matches, cfg.transfer_neighbors);
    Detection d;
    d.image_id = test.meta().image_id;
    d.part_id = part.part_id;
    d.instance = part.instance;
    d.box = Box::centered(moved.point, learned.box_width * box_scale, learned.box_height * box_scale);
    d.score = support_score(out.matches, moved.support);
    for (const TransferSupport& s : moved.support) d.support.push_back(s.pair_index);
    out.detections.push_back(std::move(d));
  }
  std::stable_sort(out.detections.begin(), out.detections.end(),
                   [](const Detection& a, const Detection& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.part_id != b.part_id) return a.part_id < b.part_id;
                     return a.instance < b.instance;
                   });
  return out;
}

nlohmann::json detections_to_json(std::span<const Detection> detections) {
  nlohmann::json out = nlohmann::json::array();
  for (const Detection& d : detections) {
    out.push_back({{"image_id", d.image_id},
                   {"part_id", d.part_id},
                   {"instance", d.instance},
                   {"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}},
                   {"score", d.score},
                   {"support", d.support}});
  }
  return out;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kSchema, "detections: expected an array");
  std::vector<Detection> out;
  for (const auto& dj : j) {
    constexpr std::string_view ctx = "detection";
    Detection d;
    d.image_id = detail::require_string(dj, "image_id", ctx);
    d.part_id = detail::require_int(dj, "part_id", ctx);
    if (dj.contains("instance")) d.instance = detail::require_int(dj, "instance", ctx);
    const auto& box = detail::require_array(dj, "box", ctx, 4);
    for (const auto& v : box) {
      if (!v.is_number()) throw Error(ErrorCode::kSchema, "detection: field 'box' must hold numbers");
    }
    d.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    if (!d.box.well_formed()) throw Error(ErrorCode::kSchema, "detection: field 'box' is not well formed");
    d.score = detail::require_number(dj, "score", ctx);
    if (d.score < 0.0 || d.score > 1.0) {
      throw Error(ErrorCode::kSchema, "detection: field 'score' must lie in [0, 1]");
    }
    if (dj.contains("support")) {
      for (const auto& s : detail::require_array(dj, "support", ctx)) {
        if (!s.is_number_integer()) throw Error(ErrorCode::kSchema, "detection: field 'support' must hold integers");
        d.support.push_back(s.get<int>());
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_detections(std::span<const Detection> detections, const std::filesystem::path& path) {
  detail::write_json_file(path, detections_to_json(detections));
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  return detail::parse_json_file(path, [](const nlohmann::json& j) { return detections_from_json(j); });
}

}  // namespace partmatch

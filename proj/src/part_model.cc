#include "partmatch/part_model.h"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <random>

#include "partmatch/error.h"
#include "partmatch/log.h"
#include "partmatch/parallel.h"
#include "partmatch/random.h"

namespace partmatch {

void ConsistencyConfig::validate() const {
  if (!(lambda3 >= 0.0) || !(lambda4 >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda3 and lambda4 must be >= 0");
  }
  if (clusters_per_part < 0) throw Error(ErrorCode::kInvalidArgument, "clusters per part must be >= 0");
  if (min_support < 1) throw Error(ErrorCode::kInvalidArgument, "min_support must be >= 1");
  if (unknown_part_penalty && !(*unknown_part_penalty >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown-part penalty must be >= 0");
  }
}

int back_project(const Vec2& center, const Mesh3D& mesh, const Viewpoint& vp,
                 const std::vector<bool>& visible) {
  if (visible.size() != static_cast<std::size_t>(mesh.num_vertices())) {
    throw Error(ErrorCode::kDimMismatch, "visibility mask does not match the mesh");
  }
  const Camera camera(vp, mesh.centroid());
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!visible[static_cast<std::size_t>(v)]) continue;
    const auto uv = camera.project(mesh.vertex(v));
    if (!uv) continue;
    const double d2 = (*uv - center).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = v;
    }
  }
  if (best < 0) throw Error(ErrorCode::kNoVisibleVertex, "no visible vertex under this viewpoint");
  return best;
}

int back_project(const Vec2& center, const Mesh3D& mesh, const Viewpoint& vp) {
  return back_project(center, mesh, vp, visible_vertices(mesh, vp));
}

namespace {

// Seeded K-means with farthest-point initialization on a small point set.
std::vector<std::size_t> kmeans(const std::vector<Vec3>& points, std::size_t k, std::uint64_t seed,
                                std::vector<Vec3>& centers) {
  const std::size_t n = points.size();
  Rng rng(seed);
  centers.clear();
  centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    std::size_t pick = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points[i] - centers.back()).squaredNorm());
      if (nearest[i] > far) {
        far = nearest[i];
        pick = i;
      }
    }
    centers.push_back(points[pick]);
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = (points[i] - centers[c]).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      changed |= assign[i] != best;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<Vec3> sum(k, Vec3::Zero());
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[assign[i]] += points[i];
      ++count[assign[i]];
    }
    // Empty clusters keep their previous center.
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) centers[c] = sum[c] / count[c];
    }
  }
  return assign;
}

}  // namespace

ClusterResult cluster_parts_detailed(std::span<const PartSample> samples, const Mesh3D& mesh,
                                     const ConsistencyConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<const PartSample*>> by_part;
  for (const PartSample& s : samples) {
    (void)mesh.vertex(s.vertex);
    by_part[s.part_id].push_back(&s);
  }

  if (cfg.clusters_per_part == 0) {
    throw Error(ErrorCode::kInvalidArgument, "enumerated cluster counts need the transferred views");
  }
  ClusterResult out;
  for (const auto& [part_id, group] : by_part) {
    const auto k = static_cast<std::size_t>(cfg.clusters_per_part);
    if (k > group.size()) {
      throw Error(ErrorCode::kTooFewSamples,
                  "part " + std::to_string(part_id) + ": " + std::to_string(k) + " clusters but only " +
                      std::to_string(group.size()) + " samples");
    }
    std::vector<Vec3> points;
    for (const PartSample* s : group) points.push_back(mesh.vertex(s->vertex));
    std::vector<Vec3> centers;
    const std::vector<std::size_t> assign =
        kmeans(points, k, derive_seed(cfg.seed, static_cast<std::uint64_t>(part_id)), centers);

    // vertex -> merged entry, so clusters snapping together become one part
    std::map<int, LearnedPart> merged;
    for (std::size_t c = 0; c < k; ++c) {
      ClusterInfo info{part_id, centers[c], 0, false, -1};
      double w = 0.0, h = 0.0;
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (assign[i] != c) continue;
        ++info.members;
        w += group[i]->box_width;
        h += group[i]->box_height;
      }
      if (info.members >= cfg.min_support) {
        info.kept = true;
        info.vertex = mesh.nearest_vertex(info.center);
        auto [it, fresh] = merged.try_emplace(info.vertex, LearnedPart{part_id, info.vertex, 0.0, 0.0, 0});
        LearnedPart& p = it->second;
        // running sums; divided below
        p.box_width += w;
        p.box_height += h;
        p.support += info.members;
      }
      out.clusters.push_back(info);
    }
    std::vector<LearnedPart> parts;
    for (auto& [vertex, p] : merged) {
      p.box_width /= p.support;
      p.box_height /= p.support;
      parts.push_back(p);
    }
    std::stable_sort(parts.begin(), parts.end(), [](const LearnedPart& a, const LearnedPart& b) {
      return a.support != b.support ? a.support > b.support : a.vertex < b.vertex;
    });
    out.model.parts.insert(out.model.parts.end(), parts.begin(), parts.end());
  }
  return out;
}

PartModel3D cluster_parts(std::span<const PartSample> samples, const Mesh3D& mesh,
                          const ConsistencyConfig& cfg) {
  return cluster_parts_detailed(samples, mesh, cfg).model;
}

ClusterResult select_clusters(std::span<const PartSample> samples, std::span<const ViewAnnotations> views,
                              const Mesh3D& mesh, const ConsistencyConfig& cfg) {
  cfg.validate();
  if (cfg.clusters_per_part > 0) return cluster_parts_detailed(samples, mesh, cfg);
  std::map<int, std::vector<PartSample>> by_part;
  for (const PartSample& s : samples) by_part[s.part_id].push_back(s);

  ClusterResult out;
  for (const auto& [part_id, group] : by_part) {
    // The loss splits over part ids, so each part only sees its own boxes.
    std::vector<ViewAnnotations> own;
    for (const ViewAnnotations& v : views) {
      ViewAnnotations w{v.viewpoint, {}};
      for (const PartAnnotation& a : v.annotations) {
        if (a.part_id == part_id) w.annotations.push_back(a);
      }
      if (!w.annotations.empty()) own.push_back(std::move(w));
    }
    const int k_max = std::min(kMaxEnumeratedClusters, static_cast<int>(group.size()));
    std::optional<ClusterResult> best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
      ConsistencyConfig c = cfg;
      c.clusters_per_part = k;
      ClusterResult r = cluster_parts_detailed(group, mesh, c);
      const double loss = consistency_loss(own, r.model, mesh, c);
      // strict improvement, so ties keep the smaller K
      if (loss < best_loss) {
        best_loss = loss;
        best = std::move(r);
      }
    }
    out.model.parts.insert(out.model.parts.end(), best->model.parts.begin(), best->model.parts.end());
    out.clusters.insert(out.clusters.end(), best->clusters.begin(), best->clusters.end());
  }
  return out;
}

double consistency_loss(std::span<const ViewAnnotations> views, const PartModel3D& model,
                        const Mesh3D& mesh, const ConsistencyConfig& cfg) {
  cfg.validate();
  double distance_sum = 0.0;
  for (const ViewAnnotations& view : views) {
    const Camera camera(view.viewpoint, mesh.centroid());
    const double penalty = cfg.unknown_part_penalty.value_or(view.viewpoint.image_diagonal());
    for (const PartAnnotation& ann : view.annotations) {
      double best = std::numeric_limits<double>::infinity();
      for (const LearnedPart* p : model.parts_with_id(ann.part_id)) {
        if (const auto uv = camera.project(mesh.vertex(p->vertex))) {
          best = std::min(best, (*uv - ann.box.center()).norm());
        }
      }
      if (best == std::numeric_limits<double>::infinity()) {
        log_warn("annotation of part " + std::to_string(ann.part_id) +
                 " has no learned counterpart; charging the unknown-part penalty");
        best = penalty;
      }
      distance_sum += best;
    }
  }
  return cfg.lambda3 * distance_sum + cfg.lambda4 * static_cast<double>(model.parts.size());
}

double overall_loss(std::span<const MatchTerm> matches, std::span<const ViewAnnotations> views,
                    const PartModel3D& model, const Mesh3D& mesh, const MatchConfig& match_cfg,
                    const ConsistencyConfig& cfg) {
  double total = 0.0;
  for (const MatchTerm& t : matches) {
    if (!t.matches || !t.source || !t.target) {
      throw Error(ErrorCode::kInvalidArgument, "match term is missing its match set or grids");
    }
    total += matching_loss(*t.matches, *t.source, *t.target, match_cfg);
  }
  return total + consistency_loss(views, model, mesh, cfg);
}

TrainResult train(std::span<const TrainingImage> images, const Mesh3D& mesh,
                  const ReferenceRenderer& renderer, const TrainOptions& options) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs at least one image");
  if (!(options.reference_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "reference scale must be > 0");
  }
  options.match.validate();
  options.consistency.validate();

  struct PerImage {
    bool used = false;
    ViewAnnotations transferred;
    std::vector<PartSample> samples;
    double matching_loss = 0.0;
  };
  std::vector<PerImage> results(images.size());

  parallel_for(images.size(), options.jobs, [&](std::size_t i) {
    const TrainingImage& img = images[i];
    const Viewpoint vp = img.viewpoint.validated();
    const ReferenceView ref = renderer(vp);
    const bool fine = img.fine.has_value() && ref.fine.has_value();
    MatchSet m = match_images(img.coarse, ref.coarse, fine ? &*img.fine : nullptr,
                              fine ? &*ref.fine : nullptr, options.match);
    m.source_id = img.coarse.meta().image_id;
    m.target_id = "reference";
    if (m.empty()) return;

    PerImage& r = results[i];
    r.used = true;
    r.matching_loss = matching_loss(m, img.coarse, ref.coarse, options.match);
    r.transferred.viewpoint = vp;
    const std::vector<bool> visible = visible_vertices(mesh, vp);
    const double to_reference = options.reference_scale / vp.scale();
    for (const PartAnnotation& ann : img.annotations) {
      const TransferredAnnotation t = transfer_box(ann, m, options.transfer_neighbors);
      r.transferred.annotations.push_back({t.part_id, t.box});
      r.samples.push_back({t.part_id, back_project(t.box.center(), mesh, vp, visible),
                           t.box.width() * to_reference, t.box.height() * to_reference});
    }
  });

  TrainResult out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    PerImage& r = results[i];
    if (!r.used) {
      log_warn("training image '" + images[i].coarse.meta().image_id +
               "' has no matches against its reference; skipped");
      out.skipped_images.push_back(static_cast<int>(i));
      continue;
    }
    out.used_images.push_back(static_cast<int>(i));
    out.transferred.push_back(std::move(r.transferred));
    out.matching_losses.push_back(r.matching_loss);
    out.samples.insert(out.samples.end(), r.samples.begin(), r.samples.end());
  }
  if (out.used_images.empty()) {
    throw Error(ErrorCode::kNoSupport, "every training image had an empty match set");
  }
  ClusterResult clustered = select_clusters(out.samples, out.transferred, mesh, options.consistency);
  out.model = std::move(clustered.model);
  out.model.mesh_id = options.mesh_id;
  out.model.reference_scale = options.reference_scale;
  out.clusters = std::move(clustered.clusters);
  return out;
}

}  // namespace partmatch

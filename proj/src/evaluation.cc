#include "partmatch/evaluation.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "partmatch/error.h"
#include "partmatch/random.h"

namespace partmatch {

double iou(const Box& a, const Box& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct RankedDet {
  const Box* box;
  double score;
  std::string_view image_id;
};

struct ApTally {
  double ap = 0.0;
  int tp = 0;
  int fp = 0;
};

// dets must already be ranked. truths maps image id -> boxes of this part.
ApTally pooled_ap(const std::vector<RankedDet>& dets,
                  const std::map<std::string_view, std::vector<const Box*>>& truths, int num_truth,
                  double thresh) {
  ApTally out;
  std::map<std::string_view, std::vector<bool>> used;
  for (const auto& [id, boxes] : truths) used[id].assign(boxes.size(), false);

  std::vector<bool> hit;
  for (const RankedDet& d : dets) {
    int best = -1;
    double best_iou = thresh;
    if (const auto it = truths.find(d.image_id); it != truths.end()) {
      auto& taken = used[d.image_id];
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (taken[g]) continue;
        const double o = iou(*d.box, *it->second[g]);
        if (o >= best_iou && (best < 0 || o > best_iou)) {
          best_iou = o;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
    }
    hit.push_back(best >= 0);
    (best >= 0 ? out.tp : out.fp) += 1;
  }
  if (num_truth == 0) return out;

  std::vector<double> precision(hit.size());
  int tp = 0;
  for (std::size_t i = 0; i < hit.size(); ++i) {
    tp += hit[i] ? 1 : 0;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  // Recall advances by 1/num_truth at every true positive.
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) out.ap += precision[i] / num_truth;
  }
  return out;
}

void rank(std::vector<RankedDet>& dets) {
  std::stable_sort(dets.begin(), dets.end(), [](const RankedDet& a, const RankedDet& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
}

}  // namespace

double average_precision(std::span<const ScoredBox> detections, std::span<const Box> truths,
                         double iou_thresh) {
  std::vector<RankedDet> dets;
  for (const ScoredBox& d : detections) dets.push_back({&d.box, d.score, {}});
  rank(dets);
  std::map<std::string_view, std::vector<const Box*>> gt;
  auto& boxes = gt[std::string_view{}];
  for (const Box& b : truths) boxes.push_back(&b);
  return pooled_ap(dets, gt, static_cast<int>(truths.size()), iou_thresh).ap;
}

EvalReport evaluate(std::span<const Detection> detections, std::span<const ImageTruth> truths,
                    double iou_thresh, const std::string& level) {
  std::map<int, std::vector<RankedDet>> dets;
  std::map<int, std::map<std::string_view, std::vector<const Box*>>> gts;
  std::map<int, int> counts;
  for (const Detection& d : detections) dets[d.part_id].push_back({&d.box, d.score, d.image_id});
  for (const ImageTruth& t : truths) {
    for (const PartAnnotation& a : t.annotations) {
      gts[a.part_id][t.image_id].push_back(&a.box);
      ++counts[a.part_id];
    }
  }
  std::vector<int> part_ids;
  for (const auto& [id, _] : dets) part_ids.push_back(id);
  for (const auto& [id, _] : gts) part_ids.push_back(id);
  std::sort(part_ids.begin(), part_ids.end());
  part_ids.erase(std::unique(part_ids.begin(), part_ids.end()), part_ids.end());

  EvalReport report;
  report.level = level;
  report.iou_threshold = iou_thresh;
  double sum = 0.0;
  int with_truth = 0;
  for (int id : part_ids) {
    std::vector<RankedDet>& ranked = dets[id];
    rank(ranked);
    const int n = counts[id];
    const ApTally t = pooled_ap(ranked, gts[id], n, iou_thresh);
    report.parts.push_back({id, n, t.tp, t.fp, n - t.tp, t.ap});
    if (n > 0) {
      sum += t.ap;
      ++with_truth;
    }
  }
  report.map = with_truth > 0 ? sum / with_truth : 0.0;
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json parts = nlohmann::json::array();
  for (const PartAp& p : report.parts) {
    parts.push_back({{"part_id", p.part_id},
                     {"num_truth", p.num_truth},
                     {"tp", p.true_positives},
                     {"fp", p.false_positives},
                     {"fn", p.false_negatives},
                     {"ap", p.num_truth > 0 ? nlohmann::json(p.ap) : nlohmann::json(nullptr)}});
  }
  return {{"level", report.level},
          {"iou_threshold", report.iou_threshold},
          {"ap_variant", kApVariant},
          {"map", report.map},
          {"parts", std::move(parts)}};
}

std::string format_table(std::span<const ReportRow> rows) {
  std::vector<std::string> levels;
  std::size_t label_width = 6;
  for (const ReportRow& r : rows) {
    label_width = std::max(label_width, r.label.size());
    for (const EvalReport& e : r.reports) {
      if (std::find(levels.begin(), levels.end(), e.level) == levels.end()) levels.push_back(e.level);
    }
  }
  std::sort(levels.begin(), levels.end());

  std::ostringstream out;
  char cell[32];
  out << std::string(label_width, ' ');
  for (const std::string& l : levels) {
    std::snprintf(cell, sizeof(cell), " %8s", l.c_str());
    out << cell;
  }
  out << "\n";
  for (const ReportRow& r : rows) {
    out << r.label << std::string(label_width - r.label.size(), ' ');
    for (const std::string& l : levels) {
      const auto it = std::find_if(r.reports.begin(), r.reports.end(),
                                   [&](const EvalReport& e) { return e.level == l; });
      if (it == r.reports.end()) {
        std::snprintf(cell, sizeof(cell), " %8s", "-");
      } else {
        std::snprintf(cell, sizeof(cell), " %8.2f", 100.0 * it->map);
      }
      out << cell;
    }
    out << "\n";
  }
  return out.str();
}

int parse_occlusion_level(const std::string& tag) {
  if (tag.size() == 2 && std::toupper(static_cast<unsigned char>(tag[0])) == 'L' && tag[1] >= '0' &&
      tag[1] <= '3') {
    return tag[1] - '0';
  }
  throw Error(ErrorCode::kInvalidArgument, "occlusion level must be one of L0..L3, got '" + tag + "'");
}

std::vector<int> occluded_cells(int rows, int cols, int level, std::uint64_t seed) {
  if (level < 0 || level > 3) throw Error(ErrorCode::kInvalidArgument, "occlusion level out of range");
  if (rows < 1 || cols < 1) throw Error(ErrorCode::kInvalidArgument, "grid must have cells");
  const int cells = rows * cols;
  std::vector<int> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0));
  std::shuffle(order.begin(), order.end(), rng);
  // Small epsilon so 0.2 * 10 does not land on 1.9999.
  const auto count = static_cast<std::size_t>(kOcclusionFractions[level] * cells + 1e-9);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

void replace_cell(FeatureGrid& g, int cell, std::uint64_t stream_seed) {
  Rng rng(derive_seed(stream_seed, static_cast<std::uint64_t>(cell)));
  random_unit_vector(rng, g.cell(cell));
}

}  // namespace

FeatureGrid occlude_grid(const FeatureGrid& g, int level, std::uint64_t seed) {
  FeatureGrid out = g;
  for (int c : occluded_cells(g.rows(), g.cols(), level, seed)) replace_cell(out, c, derive_seed(seed, 1));
  return out;
}

FeatureGrid occlude_fine_grid(const FeatureGrid& fine, const FeatureGrid& coarse, int level,
                              std::uint64_t seed) {
  std::vector<bool> masked(static_cast<std::size_t>(coarse.num_cells()), false);
  for (int c : occluded_cells(coarse.rows(), coarse.cols(), level, seed)) {
    masked[static_cast<std::size_t>(c)] = true;
  }
  FeatureGrid out = fine;
  for (int c = 0; c < fine.num_cells(); ++c) {
    const auto owner = coarse.cell_at_pixel(fine.cell_center(c));
    if (owner && masked[static_cast<std::size_t>(*owner)]) replace_cell(out, c, derive_seed(seed, 2));
  }
  return out;
}

}  // namespace partmatch

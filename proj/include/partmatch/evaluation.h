#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmatch/box.h"
#include "partmatch/detection.h"
#include "partmatch/feature_grid.h"

namespace partmatch {

inline constexpr const char* kApVariant = "all-points, monotone precision envelope";

double iou(const Box& a, const Box& b);

struct ScoredBox {
  Box box;
  double score = 0.0;
};

// Single-image AP of one part. Detections are ranked by descending score
// and matched greedily to the best unmatched ground truth at IoU >= thresh.
double average_precision(std::span<const ScoredBox> detections, std::span<const Box> truths,
                         double iou_thresh = 0.5);

struct ImageTruth {
  std::string image_id;
  std::vector<PartAnnotation> annotations;
};

struct PartAp {
  int part_id = 0;
  int num_truth = 0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  double ap = 0.0;  // meaningful only when num_truth > 0
};

struct EvalReport {
  std::string level = "L0";
  double iou_threshold = 0.5;
  std::vector<PartAp> parts;  // by part_id; parts seen in detections or truth
  double map = 0.0;
};

// Pools detections across images per part. Images are keyed by image_id;
// detections for ids without ground truth count as false positives.
EvalReport evaluate(std::span<const Detection> detections, std::span<const ImageTruth> truths,
                    double iou_thresh = 0.5, const std::string& level = "L0");

nlohmann::json to_json(const EvalReport& report);

// One row of the text table: a configuration label and one report per level.
struct ReportRow {
  std::string label;
  std::vector<EvalReport> reports;
};

// Aligned columns, mAP in percent: rows are configurations, columns L0..L3.
std::string format_table(std::span<const ReportRow> rows);

inline constexpr double kOcclusionFractions[] = {0.0, 0.2, 0.4, 0.6};

// Parses "L0".."L3" (case-insensitive) into 0..3.
int parse_occlusion_level(const std::string& tag);

// The floor(fraction * cells) cells replaced at a level. A seeded shuffle
// fixes the order, so heavier levels occlude a superset of lighter ones.
std::vector<int> occluded_cells(int rows, int cols, int level, std::uint64_t seed);

// Replaces the occluded cells with seeded random unit vectors.
FeatureGrid occlude_grid(const FeatureGrid& g, int level, std::uint64_t seed);

// Applies the occlusion of a coarse grid to a finer grid of the same image:
// every fine cell whose center lies inside an occluded coarse footprint.
FeatureGrid occlude_fine_grid(const FeatureGrid& fine, const FeatureGrid& coarse, int level,
                              std::uint64_t seed);

}  // namespace partmatch

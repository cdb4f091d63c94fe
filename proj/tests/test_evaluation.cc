#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.h"
#include "partmatch/evaluation.h"
#include "test_util.h"

using namespace partmatch;

namespace {

Box unit_at(double x, double y) { return {x, y, x + 1, y + 1}; }

const PartAp& part(const EvalReport& r, int id) {
  const auto it = std::find_if(r.parts.begin(), r.parts.end(), [&](const PartAp& p) { return p.part_id == id; });
  REQUIRE(it != r.parts.end());
  return *it;
}

}  // namespace

TEST_CASE("iou") {
  CHECK(iou(unit_at(0, 0), unit_at(0, 0)) == 1.0);
  CHECK(iou(unit_at(0, 0), unit_at(2, 2)) == 0.0);
  CHECK(iou(unit_at(0, 0), unit_at(1, 0)) == 0.0);  // touching edges
  CHECK(iou(unit_at(0, 0), Box{0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou(Box{0, 0, 4, 4}, Box{1, 1, 3, 3}) == doctest::Approx(0.25));
}

TEST_CASE("average precision examples") {
  const std::vector<Box> gt = {unit_at(0, 0)};
  const std::vector<ScoredBox> right = {{unit_at(0, 0), 0.8}};
  CHECK(average_precision(right, gt, 0.5) == 1.0);
  const std::vector<ScoredBox> wrong_first = {{unit_at(5, 5), 0.9}, {unit_at(0, 0), 0.8}};
  CHECK(average_precision(wrong_first, gt, 0.5) == doctest::Approx(0.5));
  // input order does not matter, only scores
  const std::vector<ScoredBox> reversed = {wrong_first[1], wrong_first[0]};
  CHECK(average_precision(reversed, gt, 0.5) == doctest::Approx(0.5));
  CHECK(average_precision({}, gt, 0.5) == 0.0);
  // a duplicate of a consumed truth is a false positive
  const std::vector<ScoredBox> dup = {{unit_at(0, 0), 0.9}, {unit_at(0, 0), 0.8}};
  CHECK(average_precision(dup, gt, 0.5) == 1.0);
  // IoU exactly at the threshold counts
  const std::vector<ScoredBox> third = {{Box{0.5, 0, 1.5, 1}, 0.9}};
  CHECK(average_precision(third, gt, 1.0 / 3.0) == 1.0);
}

TEST_CASE("three-image hand fixture") {
  std::vector<ImageTruth> truths = {
      {"A", {{0, unit_at(0, 0)}}},
      {"B", {{0, unit_at(10, 10)}, {1, Box{0, 0, 10, 10}}, {1, Box{20, 0, 30, 10}}}},
      {"C", {{1, Box{5, 5, 9, 9}}}},
  };
  std::vector<Detection> dets = {
      {"A", 0, 0, unit_at(0, 0), 0.9, {}},        // TP
      {"C", 0, 0, unit_at(0, 0), 0.8, {}},        // FP: no part-0 truth in C
      {"B", 0, 0, unit_at(10, 10), 0.7, {}},      // TP
      {"A", 0, 1, unit_at(0, 0), 0.6, {}},        // FP: truth consumed
      {"B", 1, 0, Box{1, 1, 10, 10}, 0.95, {}},   // TP, IoU 0.81
      {"B", 1, 1, Box{50, 50, 60, 60}, 0.9, {}},  // FP
      {"C", 1, 0, Box{5, 5, 9, 9}, 0.5, {}},      // TP
      {"A", 2, 0, unit_at(3, 3), 0.4, {}},        // no truths for part 2
  };
  // part 0: TP FP TP FP -> precision 1, 1/2, 2/3, 1/2 -> envelope 1, 2/3, 2/3, 1/2
  //         AP = (1 + 2/3) / 2
  // part 1: TP FP TP over 3 truths -> (1 + 2/3) / 3
  const double ap0 = (1.0 + 2.0 / 3.0) / 2.0;
  const double ap1 = (1.0 + 2.0 / 3.0) / 3.0;
  const EvalReport r = evaluate(dets, truths, 0.5, "L0");
  CHECK(r.level == "L0");
  CHECK(part(r, 0).ap == doctest::Approx(ap0).epsilon(1e-12));
  CHECK(part(r, 0).true_positives == 2);
  CHECK(part(r, 0).false_positives == 2);
  CHECK(part(r, 0).false_negatives == 0);
  CHECK(part(r, 1).ap == doctest::Approx(ap1).epsilon(1e-12));
  CHECK(part(r, 1).num_truth == 3);
  CHECK(part(r, 1).false_negatives == 1);
  CHECK(part(r, 2).num_truth == 0);
  CHECK(part(r, 2).false_positives == 1);
  CHECK(r.map == doctest::Approx((ap0 + ap1) / 2).epsilon(1e-12));

  const nlohmann::json j = to_json(r);
  CHECK(j["ap_variant"] == kApVariant);
  CHECK(j["parts"][2]["ap"].is_null());
  CHECK(j["parts"][0]["tp"] == 2);

  SUBCASE("image order does not matter") {
    std::mt19937 rng(1);
    for (int i = 0; i < 10; ++i) {
      std::shuffle(truths.begin(), truths.end(), rng);
      std::shuffle(dets.begin(), dets.end(), rng);
      const EvalReport s = evaluate(dets, truths, 0.5, "L0");
      CHECK(s.map == r.map);
      for (const PartAp& p : r.parts) CHECK(part(s, p.part_id).ap == p.ap);
    }
  }
}

TEST_CASE("perfect and empty detection sets") {
  std::vector<ImageTruth> truths;
  std::vector<Detection> perfect;
  for (int i = 0; i < 5; ++i) {
    const std::string id = "img" + std::to_string(i);
    truths.push_back({id, {{i % 3, unit_at(i, 0)}, {3, unit_at(0, i)}}});
    perfect.push_back({id, i % 3, 0, unit_at(i, 0), 0.5, {}});
    perfect.push_back({id, 3, 0, unit_at(0, i), 0.5, {}});
  }
  CHECK(evaluate(perfect, truths, 0.5, "L0").map == 1.0);
  CHECK(evaluate({}, truths, 0.5, "L0").map == 0.0);
  CHECK(evaluate({}, {}, 0.5, "L0").map == 0.0);
}

TEST_CASE("a correct detection above every false positive never lowers AP") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> pos(0, 100);
  std::uniform_real_distribution<double> score(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Box> gt;
    for (int i = 0; i < 6; ++i) gt.push_back(Box::centered(Vec2(200 + 30 * i, 50), 10, 10));
    std::vector<ScoredBox> dets;
    double max_fp = 0;
    for (int i = 0; i < 8; ++i) {
      if (score(rng) < 0.5) {
        dets.push_back({gt[static_cast<std::size_t>(i % 5)], score(rng)});
      } else {
        const double s = score(rng);
        max_fp = std::max(max_fp, s);
        dets.push_back({Box::centered(Vec2(pos(rng), pos(rng)), 10, 10), s});
      }
    }
    const double before = average_precision(dets, gt, 0.5);
    dets.push_back({gt[5], max_fp + 0.01});  // truth 5 is never hit otherwise
    CHECK(average_precision(dets, gt, 0.5) >= before - 1e-15);
  }
}

TEST_CASE("occlusion levels") {
  CHECK(parse_occlusion_level("L0") == 0);
  CHECK(parse_occlusion_level("l3") == 3);
  CHECK_ERROR_CODE(parse_occlusion_level("L4"), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(parse_occlusion_level("2"), ErrorCode::kInvalidArgument);

  const FeatureGrid g = oracle::random_grid(10, 10, 16, 3);
  CHECK(occlude_grid(g, 0, 5) == g);
  CHECK(occluded_cells(10, 10, 0, 5).empty());

  const FeatureGrid o = occlude_grid(g, 2, 5);
  int changed = 0;
  const std::vector<int> cells = occluded_cells(10, 10, 2, 5);
  const std::set<int> cell_set(cells.begin(), cells.end());
  for (int c = 0; c < g.num_cells(); ++c) {
    const bool differs = !std::equal(g.cell(c).begin(), g.cell(c).end(), o.cell(c).begin());
    changed += differs ? 1 : 0;
    CHECK(differs == (cell_set.count(c) == 1));
    double n = 0;
    for (float v : o.cell(c)) n += double(v) * v;
    CHECK(std::abs(n - 1.0) < 1e-5);
  }
  CHECK(changed == 40);
  CHECK(cells.size() == 40);
  CHECK(occluded_cells(10, 10, 1, 5).size() == 20);
  CHECK(occluded_cells(10, 10, 3, 5).size() == 60);
  CHECK(occluded_cells(14, 14, 1, 5).size() == 39);
  CHECK(occlude_grid(g, 2, 5) == o);
  CHECK_FALSE(occlude_grid(g, 2, 6) == o);

  // heavier levels contain the lighter ones
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<int> prev;
    for (int level = 0; level <= 3; ++level) {
      const std::vector<int> cur = occluded_cells(14, 14, level, seed);
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST_CASE("fine occlusion follows the coarse cells") {
  const FeatureGrid coarse = oracle::random_grid(6, 6, 8, 1, 16.0f);
  const FeatureGrid fine = oracle::random_grid(12, 12, 8, 2, 8.0f);
  const std::vector<int> cells = occluded_cells(6, 6, 2, 9);
  const std::set<int> masked(cells.begin(), cells.end());
  const FeatureGrid out = occlude_fine_grid(fine, coarse, 2, 9);
  int changed = 0;
  for (int c = 0; c < fine.num_cells(); ++c) {
    const bool differs = !std::equal(fine.cell(c).begin(), fine.cell(c).end(), out.cell(c).begin());
    const int owner = *coarse.cell_at_pixel(fine.cell_center(c));
    CHECK(differs == (masked.count(owner) == 1));
    changed += differs ? 1 : 0;
  }
  CHECK(changed == 4 * static_cast<int>(cells.size()));
}

TEST_CASE("report table") {
  EvalReport l0{"L0", 0.5, {}, 1.0};
  EvalReport l2{"L2", 0.5, {}, 0.4567};
  const std::vector<ReportRow> rows = {{"partmatch", {l2, l0}}, {"other", {l0}}};
  const std::string table = format_table(rows);
  CHECK(table ==
        "                L0       L2\n"
        "partmatch   100.00    45.67\n"
        "other       100.00        -\n");
}

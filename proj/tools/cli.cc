#include "cli.h"

#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "../src/json_util.h"
#include "partmatch/corpus.h"
#include "partmatch/detection.h"
#include "partmatch/error.h"
#include "partmatch/evaluation.h"
#include "partmatch/log.h"
#include "partmatch/overlay.h"
#include "partmatch/random.h"
#include "partmatch/synthetic.h"

namespace partmatch::cli {
namespace {

namespace fs = std::filesystem;

// Bad flag values detected after parsing; reported with the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_match_flags(CLI::App* cmd, MatchConfig& m) {
  cmd->add_option("--xi", m.xi, "appearance distance threshold")->capture_default_str();
  cmd->add_option("--zeta", m.zeta, "displacement consistency threshold, pixels")->capture_default_str();
  cmd->add_option("--lambda1", m.lambda1, "matching loss appearance weight")->capture_default_str();
  cmd->add_option("--lambda2", m.lambda2, "matching loss spatial weight")->capture_default_str();
  cmd->add_option("--max-candidates", m.max_candidates, "candidate pair cap")->capture_default_str();
}

void add_energy_flags(CLI::App* cmd, ViewpointEnergyConfig& e) {
  cmd->add_option("--lambda", e.lambda, "energy similarity weight")->capture_default_str();
  cmd->add_option("--mu", e.mu, "energy distance weight")->capture_default_str();
  cmd->add_option("--gamma", e.gamma, "energy direction weight")->capture_default_str();
  cmd->add_option("--fine-step", e.fine_step, "fine scan step, degrees")->capture_default_str();
  cmd->add_option("--fine-window", e.fine_window, "fine scan width, degrees")->capture_default_str();
}

void add_common_flags(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--seed", rc.seed, "seed for all randomness")->capture_default_str();
  cmd->add_option("--jobs", rc.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    detail::write_text_atomic(path, text);
  }
}

void write_json(const std::string& path, const nlohmann::json& j, std::ostream& out) {
  write_text(path, j.dump(2) + "\n", out);
}

// Geometry comes from the mesh file; rendering from the corpus scene, so
// the two have to describe the same object.
Mesh3D load_mesh_for(const fs::path& mesh_path, const SyntheticScene& scene) {
  Mesh3D mesh = read_obj(mesh_path);
  if (mesh.num_vertices() != scene.mesh().num_vertices()) {
    throw Error(ErrorCode::kSchema, mesh_path.string() + ": " + std::to_string(mesh.num_vertices()) +
                                        " vertices, but the corpus scene has " +
                                        std::to_string(scene.mesh().num_vertices()));
  }
  return mesh;
}

Viewpoint grid_viewpoint(const CorpusImage& img) {
  if (!img.coarse.meta().viewpoint) {
    throw Error(ErrorCode::kNoViewpoint, "grid '" + img.id + "': metadata has no field 'viewpoint'");
  }
  return *img.coarse.meta().viewpoint;
}

struct SynthArgs {
  std::string out;
  ProxySpec proxy;
  DatasetSpec dataset;
  int per_bin = 2;
  int test_per_bin = 4;
  int novel_per_bin = 4;
  double novel_elevation = 20.0;
};

void cmd_synth(const SynthArgs& a, const RunConfig& rc) {
  SceneConfig scene_cfg;
  scene_cfg.proxy = a.proxy;
  scene_cfg.seed = rc.seed;
  const SyntheticScene scene(scene_cfg);
  DatasetSpec spec = a.dataset;
  spec.seed = rc.seed;
  spec.splits = {{"train", a.per_bin, 0.0}, {"test", a.test_per_bin, 0.0}};
  if (a.novel_per_bin > 0) spec.splits.push_back({"novel", a.novel_per_bin, a.novel_elevation});
  const CorpusManifest m = synth_dataset(scene, spec, a.out);
  std::size_t total = 0;
  for (const auto& [name, entries] : m.splits) total += entries.size();
  log_info("wrote " + std::to_string(total) + " images to " + a.out);
}

struct TrainArgs {
  std::string corpus, mesh, split = "train", out, report;
  int neighbors = kDefaultTransferNeighbors;
};

void cmd_train(const TrainArgs& a, RunConfig rc, std::ostream& out) {
  const CorpusManifest manifest = read_manifest(a.corpus);
  const SyntheticScene scene(manifest.scene);
  const fs::path mesh_path = a.mesh.empty() ? fs::path(a.corpus) / "mesh.obj" : fs::path(a.mesh);
  const Mesh3D mesh = load_mesh_for(mesh_path, scene);
  std::vector<TrainingImage> images;
  for (CorpusImage& img : load_split(a.corpus, manifest, a.split)) {
    const Viewpoint vp = grid_viewpoint(img);
    images.push_back({std::move(img.coarse), std::move(img.fine), std::move(img.annotations), vp});
  }
  TrainOptions opt;
  opt.match = rc.match;
  rc.consistency.seed = rc.seed;
  opt.consistency = rc.consistency;
  opt.transfer_neighbors = a.neighbors;
  opt.mesh_id = mesh_path.filename().string();
  opt.reference_scale = scene.reference_scale();
  opt.jobs = rc.jobs;
  const TrainResult r = train(images, mesh, make_reference_renderer(scene), opt);
  write_json(a.out, to_json(r.model), out);

  if (!a.report.empty()) {
    double matching = 0.0;
    for (double l : r.matching_losses) matching += l;
    const double consistency = consistency_loss(r.transferred, r.model, mesh, opt.consistency);
    nlohmann::json clusters = nlohmann::json::array();
    for (const ClusterInfo& c : r.clusters) {
      clusters.push_back({{"part_id", c.part_id},
                          {"center", {c.center.x(), c.center.y(), c.center.z()}},
                          {"members", c.members},
                          {"kept", c.kept},
                          {"vertex", c.vertex}});
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (int i : r.skipped_images) skipped.push_back(images[static_cast<std::size_t>(i)].coarse.meta().image_id);
    detail::write_json_file(a.report, {{"images", images.size()},
                                       {"skipped", std::move(skipped)},
                                       {"samples", r.samples.size()},
                                       {"matching_loss", matching},
                                       {"consistency_loss", consistency},
                                       {"overall_loss", matching + consistency},
                                       {"clusters", std::move(clusters)}});
  }
}

struct MatchArgs {
  std::string a, b, fine_a, fine_b, out, svg;
};

void cmd_match(const MatchArgs& a, const RunConfig& rc, std::ostream& out) {
  if (a.fine_a.empty() != a.fine_b.empty()) {
    throw UsageError("--fine-a and --fine-b must be given together");
  }
  const FeatureGrid ga = read_grid(a.a);
  const FeatureGrid gb = read_grid(a.b);
  std::optional<FeatureGrid> fa, fb;
  if (!a.fine_a.empty()) fa = read_grid(a.fine_a);
  if (!a.fine_b.empty()) fb = read_grid(a.fine_b);
  MatchSet m = match_images(ga, gb, fa ? &*fa : nullptr, fb ? &*fb : nullptr, rc.match);
  m.source_id = ga.meta().image_id;
  m.target_id = gb.meta().image_id;
  nlohmann::json j = to_json(m);
  j["matching_loss"] = matching_loss(m, ga, gb, rc.match);
  write_json(a.out, j, out);
  if (!a.svg.empty()) {
    detail::write_text_atomic(a.svg, emit_overlay_svg(ga.meta(), gb.meta(), m.pairs, {}, {}));
  }
}

struct PredictArgs {
  std::string corpus, split = "test", grid, fine, out;
};

void cmd_predict(const PredictArgs& a, const RunConfig& rc, std::ostream& out) {
  const CorpusManifest manifest = read_manifest(a.corpus);
  const SyntheticScene scene(manifest.scene);
  const ReferenceRenderer renderer = make_reference_renderer(scene);
  std::vector<CorpusImage> images;
  if (!a.grid.empty()) {
    FeatureGrid g = read_grid(a.grid);
    FeatureGrid f = a.fine.empty() ? g : read_grid(a.fine);
    const std::string id = g.meta().image_id;
    images.push_back({id, std::move(g), std::move(f), {}});
  } else {
    images = load_split(a.corpus, manifest, a.split);
  }
  nlohmann::json results = nlohmann::json::array();
  for (const CorpusImage& img : images) {
    const bool fine = a.grid.empty() || !a.fine.empty();
    Viewpoint base = scene.config().camera;
    if (img.coarse.meta().viewpoint) base.elevation = img.coarse.meta().viewpoint->elevation;
    nlohmann::json entry = {{"image_id", img.id}};
    if (img.coarse.meta().viewpoint) entry["truth_azimuth"] = img.coarse.meta().viewpoint->azimuth;
    try {
      const ViewpointPrediction p = predict_viewpoint(img.coarse, fine ? &img.fine : nullptr, renderer,
                                                      base, rc.energy, rc.match, rc.jobs);
      entry["prediction"] = to_json(p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoViewpoint) throw;
      log_warn(img.id + ": " + e.what());
      entry["prediction"] = nullptr;
    }
    results.push_back(std::move(entry));
  }
  write_json(a.out, {{"images", std::move(results)}}, out);
}

struct DetectArgs {
  std::string corpus, split = "test", model, mesh, viewpoint = "given", occlusion = "L0", out, svg_dir;
  int neighbors = kDefaultTransferNeighbors;
};

void cmd_detect(const DetectArgs& a, const RunConfig& rc, std::ostream& out) {
  const CorpusManifest manifest = read_manifest(a.corpus);
  const SyntheticScene scene(manifest.scene);
  const fs::path mesh_path = a.mesh.empty() ? fs::path(a.corpus) / "mesh.obj" : fs::path(a.mesh);
  const Mesh3D mesh = load_mesh_for(mesh_path, scene);
  const PartModel3D model = read_part_model(a.model);
  const ReferenceRenderer renderer = make_reference_renderer(scene);
  const int level = parse_occlusion_level(a.occlusion);
  const std::vector<CorpusImage> images = load_split(a.corpus, manifest, a.split);
  if (!a.svg_dir.empty()) fs::create_directories(a.svg_dir);

  DetectConfig cfg;
  cfg.match = rc.match;
  cfg.viewpoint = rc.energy;
  cfg.transfer_neighbors = a.neighbors;
  std::vector<std::vector<Detection>> per_image(images.size());
  // Viewpoint prediction parallelizes internally, so images run in turn.
  for (std::size_t i = 0; i < images.size(); ++i) {
    const CorpusImage& img = images[i];
    const std::uint64_t seed = derive_seed(rc.seed, i);
    const FeatureGrid coarse = occlude_grid(img.coarse, level, seed);
    const FeatureGrid fine = occlude_fine_grid(img.fine, img.coarse, level, seed);
    std::optional<Viewpoint> vp;
    if (a.viewpoint == "given") vp = grid_viewpoint(img);
    cfg.reference_camera = scene.config().camera;
    if (img.coarse.meta().viewpoint) cfg.reference_camera.elevation = img.coarse.meta().viewpoint->elevation;
    const DetectionResult r = detect(coarse, &fine, model, mesh, renderer, vp, cfg, rc.jobs);
    per_image[i] = r.detections;
    if (!a.svg_dir.empty()) {
      std::vector<OverlayBox> dets, gts;
      for (const Detection& d : r.detections) dets.push_back({d.box, std::to_string(d.part_id)});
      for (const PartAnnotation& g : img.annotations) gts.push_back({g.box, ""});
      GridMeta left = coarse.meta();
      left.image_id = "reference";
      detail::write_text_atomic(fs::path(a.svg_dir) / (img.id + ".svg"),
                                emit_overlay_svg(left, coarse.meta(), r.matches.pairs, dets, gts));
    }
  }
  std::vector<Detection> all;
  for (auto& d : per_image) all.insert(all.end(), d.begin(), d.end());
  write_json(a.out, detections_to_json(all), out);
}

struct EvalArgs {
  std::string corpus, split = "test", out, table, label = "partmatch";
  std::vector<std::string> det;
  double iou = 0.5;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const CorpusManifest manifest = read_manifest(a.corpus);
  std::vector<ImageTruth> truths;
  for (CorpusImage& img : load_split(a.corpus, manifest, a.split)) {
    truths.push_back({img.id, std::move(img.annotations)});
  }
  ReportRow row{a.label, {}};
  std::map<std::string, bool> seen;
  for (const std::string& spec : a.det) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--det expects LEVEL=PATH, got '" + spec + "'");
    }
    const std::string level = spec.substr(0, eq);
    if (level.size() != 2 || level[0] != 'L' || level[1] < '0' || level[1] > '3') {
      throw UsageError("--det level must be L0..L3, got '" + level + "'");
    }
    if (seen[level]) throw UsageError("--det level " + level + " given twice");
    seen[level] = true;
    const std::vector<Detection> dets = read_detections(spec.substr(eq + 1));
    row.reports.push_back(evaluate(dets, truths, a.iou, level));
  }
  nlohmann::json reports = nlohmann::json::array();
  for (const EvalReport& r : row.reports) reports.push_back(to_json(r));
  const std::string table = format_table(std::span<const ReportRow>(&row, 1));
  if (!a.out.empty()) {
    detail::write_json_file(a.out, {{"label", a.label},
                                    {"split", a.split},
                                    {"ap_variant", kApVariant},
                                    {"occlusion", "random cell replacement, fractions 0/0.2/0.4/0.6"},
                                    {"reports", std::move(reports)}});
  }
  if (!a.table.empty()) detail::write_text_atomic(a.table, table);
  out << table;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic part detection by matching against a 3D model", "partmatch"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off (PARTMATCH_LOG)");

  RunConfig rc;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  c_synth->add_option("--out", synth.out, "corpus directory")->required();
  c_synth->add_option("--template", synth.proxy.template_name, "proxy template")
      ->capture_default_str()
      ->check(CLI::IsMember(proxy_templates()));
  c_synth->add_option("--length", synth.proxy.length, "relative length (0 = template)");
  c_synth->add_option("--width", synth.proxy.width, "relative width (0 = template)");
  c_synth->add_option("--height", synth.proxy.height, "relative height (0 = template)");
  c_synth->add_option("--spacing", synth.proxy.spacing, "lattice spacing")->capture_default_str();
  c_synth->add_option("--per-bin", synth.per_bin, "training images per bin")->capture_default_str();
  c_synth->add_option("--test-per-bin", synth.test_per_bin, "test images per bin")->capture_default_str();
  c_synth->add_option("--novel-per-bin", synth.novel_per_bin, "novel-elevation images per bin")
      ->capture_default_str();
  c_synth->add_option("--novel-elevation", synth.novel_elevation, "elevation of the novel split")
      ->capture_default_str();
  c_synth->add_option("--bins", synth.dataset.bins, "azimuth bins")->capture_default_str();
  c_synth->add_option("--sigma", synth.dataset.sigma, "feature noise")->capture_default_str();
  c_synth->add_option("--jitter", synth.dataset.jitter, "azimuth jitter, degrees")->capture_default_str();
  add_common_flags(c_synth, rc);

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "learn the 3D part model");
  c_train->add_option("--corpus", train_args.corpus, "corpus directory")->required();
  c_train->add_option("--mesh", train_args.mesh, "mesh OBJ (default: corpus mesh.obj)");
  c_train->add_option("--split", train_args.split, "training split")->capture_default_str();
  c_train->add_option("--out", train_args.out, "model JSON (default: stdout)");
  c_train->add_option("--report", train_args.report, "diagnostics JSON");
  c_train->add_option("--neighbors", train_args.neighbors, "transfer neighbors")->capture_default_str();
  c_train->add_option("--clusters-per-part", rc.consistency.clusters_per_part, "K-means centers per part, 0 = enumerate")->capture_default_str();
  c_train->add_option("--min-support", rc.consistency.min_support, "minimum cluster size")
      ->capture_default_str();
  c_train->add_option("--lambda3", rc.consistency.lambda3, "consistency distance weight")
      ->capture_default_str();
  c_train->add_option("--lambda4", rc.consistency.lambda4, "per-part cost")->capture_default_str();
  add_match_flags(c_train, rc.match);
  add_common_flags(c_train, rc);

  MatchArgs match_args;
  auto* c_match = app.add_subcommand("match", "match two feature grids");
  c_match->add_option("--a", match_args.a, "source grid")->required();
  c_match->add_option("--b", match_args.b, "target grid")->required();
  c_match->add_option("--fine-a", match_args.fine_a, "source fine grid");
  c_match->add_option("--fine-b", match_args.fine_b, "target fine grid");
  c_match->add_option("--out", match_args.out, "match set JSON (default: stdout)");
  c_match->add_option("--svg", match_args.svg, "overlay SVG");
  add_match_flags(c_match, rc.match);
  add_common_flags(c_match, rc);

  PredictArgs predict_args;
  auto* c_predict = app.add_subcommand("predict-viewpoint", "predict azimuths");
  c_predict->add_option("--corpus", predict_args.corpus, "corpus directory")->required();
  c_predict->add_option("--split", predict_args.split, "split to predict")->capture_default_str();
  c_predict->add_option("--grid", predict_args.grid, "single grid instead of a split");
  c_predict->add_option("--fine", predict_args.fine, "fine grid for --grid");
  c_predict->add_option("--out", predict_args.out, "predictions JSON (default: stdout)");
  add_energy_flags(c_predict, rc.energy);
  add_match_flags(c_predict, rc.match);
  add_common_flags(c_predict, rc);

  DetectArgs detect_args;
  auto* c_detect = app.add_subcommand("detect", "detect parts on a split");
  c_detect->add_option("--corpus", detect_args.corpus, "corpus directory")->required();
  c_detect->add_option("--model", detect_args.model, "part model JSON")->required();
  c_detect->add_option("--mesh", detect_args.mesh, "mesh OBJ (default: corpus mesh.obj)");
  c_detect->add_option("--split", detect_args.split, "split to detect")->capture_default_str();
  c_detect->add_option("--viewpoint", detect_args.viewpoint, "given or predict")
      ->capture_default_str()
      ->check(CLI::IsMember({"given", "predict"}));
  c_detect->add_option("--occlusion", detect_args.occlusion, "L0..L3")
      ->capture_default_str()
      ->check(CLI::IsMember({"L0", "L1", "L2", "L3"}));
  c_detect->add_option("--out", detect_args.out, "detections JSON (default: stdout)");
  c_detect->add_option("--svg-dir", detect_args.svg_dir, "per-image overlay directory");
  c_detect->add_option("--neighbors", detect_args.neighbors, "transfer neighbors")->capture_default_str();
  add_energy_flags(c_detect, rc.energy);
  add_match_flags(c_detect, rc.match);
  add_common_flags(c_detect, rc);

  EvalArgs eval_args;
  auto* c_eval = app.add_subcommand("eval", "score detections");
  c_eval->add_option("--corpus", eval_args.corpus, "corpus directory")->required();
  c_eval->add_option("--split", eval_args.split, "split with ground truth")->capture_default_str();
  c_eval->add_option("--det", eval_args.det, "LEVEL=detections.json, repeatable")->required();
  c_eval->add_option("--label", eval_args.label, "row label")->capture_default_str();
  c_eval->add_option("--iou", eval_args.iou, "IoU threshold")->capture_default_str();
  c_eval->add_option("--out", eval_args.out, "report JSON");
  c_eval->add_option("--table", eval_args.table, "text table file");

  std::vector<const char*> args;
  for (const std::string& s : argv) args.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "partmatch: " << e.what() << "\n";
    return kExitUsage;
  }

  rc.command = app.get_subcommands().front()->get_name();
  try {
    rc.match.validate();
    rc.consistency.validate();
    rc.energy.validate();
  } catch (const Error& e) {
    err << "partmatch " << rc.command << ": " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (!log_level.empty()) set_log_level(log_level);
    if (rc.command == "synth") {
      cmd_synth(synth, rc);
    } else if (rc.command == "train") {
      cmd_train(train_args, rc, out);
    } else if (rc.command == "match") {
      cmd_match(match_args, rc, out);
    } else if (rc.command == "predict-viewpoint") {
      cmd_predict(predict_args, rc, out);
    } else if (rc.command == "detect") {
      cmd_detect(detect_args, rc, out);
    } else {
      cmd_eval(eval_args, out);
    }
  } catch (const UsageError& e) {
    err << "partmatch " << rc.command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "partmatch " << rc.command << ": " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace partmatch::cli

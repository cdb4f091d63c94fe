#include "partmatch/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "json_util.h"
#include "partmatch/error.h"
#include "partmatch/random.h"

namespace partmatch {
namespace {

struct PartTemplate {
  const char* name;
  // Fractional lattice position along (width x, length y, height z).
  double fx, fy, fz;
};

struct ProxyTemplate {
  const char* name;
  double length, width, height;
  std::vector<PartTemplate> parts;
};

const std::vector<ProxyTemplate>& templates() {
  // Length runs along +y (front), width along x (left is -x), z is up.
  static const std::vector<ProxyTemplate> kTemplates = {
      {"box-car",
       2.0,
       1.0,
       0.8,
       {{"wheel_front_left", 0.0, 5.0 / 6.0, 0.2},
        {"wheel_front_right", 1.0, 5.0 / 6.0, 0.2},
        {"wheel_back_left", 0.0, 1.0 / 6.0, 0.2},
        {"wheel_back_right", 1.0, 1.0 / 6.0, 0.2},
        {"headlight_left", 1.0 / 6.0, 1.0, 0.4},
        {"headlight_right", 5.0 / 6.0, 1.0, 0.4},
        {"mirror_left", 0.0, 2.0 / 3.0, 0.8},
        {"mirror_right", 1.0, 2.0 / 3.0, 0.8}}},
      {"box-bike",
       2.0,
       0.5,
       1.4,
       {{"wheel_front_left", 0.0, 0.85, 0.2},
        {"wheel_front_right", 1.0, 0.85, 0.2},
        {"wheel_back_left", 0.0, 0.15, 0.2},
        {"wheel_back_right", 1.0, 0.15, 0.2},
        {"handle_left", 0.0, 0.8, 0.85},
        {"handle_right", 1.0, 0.8, 0.85},
        {"headlight", 0.5, 1.0, 0.6},
        {"taillight", 0.5, 0.0, 0.6}}},
  };
  return kTemplates;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<float> descriptor_table(int vertices, int dim, std::uint64_t seed) {
  std::vector<float> table(static_cast<std::size_t>(vertices) * dim);
  Rng rng(seed);
  for (int v = 0; v < vertices; ++v) {
    random_unit_vector(rng, std::span<float>(table).subspan(static_cast<std::size_t>(v) * dim,
                                                            static_cast<std::size_t>(dim)));
  }
  return table;
}

nlohmann::json shape_to_json(const GridShape& s) {
  return {{"rows", s.rows}, {"cols", s.cols}, {"dim", s.dim}, {"stride", s.stride}};
}

GridShape shape_from_json(const nlohmann::json& j, std::string_view ctx) {
  GridShape s;
  s.rows = detail::require_int(j, "rows", ctx);
  s.cols = detail::require_int(j, "cols", ctx);
  s.dim = detail::require_int(j, "dim", ctx);
  s.stride = static_cast<float>(detail::require_number(j, "stride", ctx));
  return s;
}

struct Splat {
  double d2 = std::numeric_limits<double>::infinity();
  int vertex = -1;
  Vec2 pixel = Vec2::Zero();
};

FeatureGrid render_level(const SyntheticScene& scene, const GridShape& shape, bool fine,
                         const std::vector<std::pair<int, Vec2>>& projected, double sigma,
                         std::uint64_t seed, const GridMeta& meta,
                         std::map<int, CellTruth>& truth) {
  FeatureGrid grid(shape.rows, shape.cols, shape.dim, shape.stride, meta);
  std::vector<Splat> splats(static_cast<std::size_t>(grid.num_cells()));
  for (const auto& [vertex, uv] : projected) {
    const auto cell = grid.cell_at_pixel(uv);
    if (!cell) continue;
    const double d2 = (grid.cell_center(*cell) - uv).squaredNorm();
    Splat& s = splats[static_cast<std::size_t>(*cell)];
    if (d2 < s.d2 || (d2 == s.d2 && vertex < s.vertex)) s = {d2, vertex, uv};
  }
  Rng rng(seed);
  for (int c = 0; c < grid.num_cells(); ++c) {
    auto out = grid.cell(c);
    const Splat& s = splats[static_cast<std::size_t>(c)];
    if (s.vertex >= 0) {
      const auto d = scene.descriptor(s.vertex, fine);
      std::copy(d.begin(), d.end(), out.begin());
      truth[c] = {s.vertex, s.pixel};
    } else {
      random_unit_vector(rng, out);
    }
  }
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (int c = 0; c < grid.num_cells(); ++c) {
      for (float& v : grid.cell(c)) v = static_cast<float>(v + noise(rng));
    }
  }
  return normalize(grid).grid;
}

}  // namespace

std::vector<std::string> proxy_templates() {
  std::vector<std::string> out;
  for (const auto& t : templates()) out.emplace_back(t.name);
  return out;
}

ProxyModel make_proxy_mesh(const ProxySpec& spec) {
  const auto it = std::find_if(templates().begin(), templates().end(),
                               [&](const ProxyTemplate& t) { return spec.template_name == t.name; });
  if (it == templates().end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown proxy template '" + spec.template_name + "'");
  }
  const double length = spec.length == 0.0 ? it->length : spec.length;
  const double width = spec.width == 0.0 ? it->width : spec.width;
  const double height = spec.height == 0.0 ? it->height : spec.height;
  if (!(length > 0.0 && width > 0.0 && height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "proxy dimensions must be positive");
  }
  if (!(spec.spacing > 0.0)) throw Error(ErrorCode::kInvalidArgument, "proxy spacing must be > 0");

  const double diag = std::sqrt(length * length + width * width + height * height);
  const Vec3 extent(width / diag, length / diag, height / diag);
  const int nx = std::max(2, static_cast<int>(std::lround(extent.x() / spec.spacing)));
  const int ny = std::max(2, static_cast<int>(std::lround(extent.y() / spec.spacing)));
  const int nz = std::max(2, static_cast<int>(std::lround(extent.z() / spec.spacing)));

  // Surface lattice points of the subdivided box.
  std::vector<int> index((nx + 1) * (ny + 1) * (nz + 1), -1);
  const auto at = [&](int i, int j, int k) -> int& { return index[(i * (ny + 1) + j) * (nz + 1) + k]; };
  std::vector<Vec3> vertices;
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      for (int k = 0; k <= nz; ++k) {
        if (i != 0 && i != nx && j != 0 && j != ny && k != 0 && k != nz) continue;
        at(i, j, k) = static_cast<int>(vertices.size());
        vertices.emplace_back(-0.5 * extent.x() + extent.x() * i / nx,
                              -0.5 * extent.y() + extent.y() * j / ny,
                              -0.5 * extent.z() + extent.z() * k / nz);
      }
    }
  }

  std::vector<Triangle> triangles;
  // Each face is a grid over two lattice axes with the third fixed.
  const auto face = [&](int fixed_axis, int fixed_value) {
    const int a_axis = (fixed_axis + 1) % 3;
    const int b_axis = (fixed_axis + 2) % 3;
    const int counts[3] = {nx, ny, nz};
    for (int a = 0; a < counts[a_axis]; ++a) {
      for (int b = 0; b < counts[b_axis]; ++b) {
        const auto corner = [&](int da, int db) {
          int ijk[3];
          ijk[fixed_axis] = fixed_value;
          ijk[a_axis] = a + da;
          ijk[b_axis] = b + db;
          return at(ijk[0], ijk[1], ijk[2]);
        };
        const int c0 = corner(0, 0), c1 = corner(1, 0), c2 = corner(1, 1), c3 = corner(0, 1);
        if (fixed_value == 0) {
          triangles.push_back({c0, c2, c1});
          triangles.push_back({c0, c3, c2});
        } else {
          triangles.push_back({c0, c1, c2});
          triangles.push_back({c0, c2, c3});
        }
      }
    }
  };
  face(0, 0);
  face(0, nx);
  face(1, 0);
  face(1, ny);
  face(2, 0);
  face(2, nz);

  ProxyModel model{Mesh3D(std::move(vertices), std::move(triangles)), {}};
  std::set<int> used;
  for (std::size_t p = 0; p < it->parts.size(); ++p) {
    const PartTemplate& pt = it->parts[p];
    const int i = static_cast<int>(std::lround(pt.fx * nx));
    const int j = static_cast<int>(std::lround(pt.fy * ny));
    const int k = static_cast<int>(std::lround(pt.fz * nz));
    const int v = at(i, j, k);
    if (v < 0 || !used.insert(v).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "proxy dimensions collapse part '" + std::string(pt.name) + "'");
    }
    model.parts.push_back({static_cast<int>(p), pt.name, v});
  }
  return model;
}

nlohmann::json to_json(const SceneConfig& cfg) {
  return {{"template", cfg.proxy.template_name},
          {"length", cfg.proxy.length},
          {"width", cfg.proxy.width},
          {"height", cfg.proxy.height},
          {"spacing", cfg.proxy.spacing},
          {"coarse", shape_to_json(cfg.coarse)},
          {"fine", shape_to_json(cfg.fine)},
          {"camera",
           {{"azimuth", cfg.camera.azimuth},
            {"elevation", cfg.camera.elevation},
            {"distance", cfg.camera.distance},
            {"focal", cfg.camera.focal},
            {"width", cfg.camera.width},
            {"height", cfg.camera.height}}},
          {"part_box_size", cfg.part_box_size},
          {"seed", cfg.seed}};
}

SceneConfig scene_config_from_json(const nlohmann::json& j) {
  constexpr std::string_view ctx = "scene config";
  SceneConfig cfg;
  cfg.proxy.template_name = detail::require_string(j, "template", ctx);
  cfg.proxy.length = detail::require_number(j, "length", ctx);
  cfg.proxy.width = detail::require_number(j, "width", ctx);
  cfg.proxy.height = detail::require_number(j, "height", ctx);
  cfg.proxy.spacing = detail::require_number(j, "spacing", ctx);
  cfg.coarse = shape_from_json(detail::require(j, "coarse", ctx), "scene config coarse");
  cfg.fine = shape_from_json(detail::require(j, "fine", ctx), "scene config fine");
  const auto& cam = detail::require(j, "camera", ctx);
  constexpr std::string_view cctx = "scene config camera";
  cfg.camera.azimuth = detail::require_number(cam, "azimuth", cctx);
  cfg.camera.elevation = detail::require_number(cam, "elevation", cctx);
  cfg.camera.distance = detail::require_number(cam, "distance", cctx);
  cfg.camera.focal = detail::require_number(cam, "focal", cctx);
  cfg.camera.width = detail::require_int(cam, "width", cctx);
  cfg.camera.height = detail::require_int(cam, "height", cctx);
  cfg.part_box_size = detail::require_number(j, "part_box_size", ctx);
  const auto& seed = detail::require(j, "seed", ctx);
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw Error(ErrorCode::kSchema, "scene config: field 'seed' must be an integer");
  }
  cfg.seed = seed.get<std::uint64_t>();
  return cfg;
}

SyntheticScene::SyntheticScene(SceneConfig cfg)
    : cfg_(std::move(cfg)), proxy_(make_proxy_mesh(cfg_.proxy)) {
  cfg_.camera = cfg_.camera.validated();
  coarse_table_ = descriptor_table(proxy_.mesh.num_vertices(), cfg_.coarse.dim, derive_seed(cfg_.seed, 1));
  fine_table_ = descriptor_table(proxy_.mesh.num_vertices(), cfg_.fine.dim, derive_seed(cfg_.seed, 2));
}

std::span<const float> SyntheticScene::descriptor(int vertex, bool fine) const {
  (void)proxy_.mesh.vertex(vertex);
  const int dim = fine ? cfg_.fine.dim : cfg_.coarse.dim;
  const auto& table = fine ? fine_table_ : coarse_table_;
  return std::span<const float>(table).subspan(static_cast<std::size_t>(vertex) * dim,
                                               static_cast<std::size_t>(dim));
}

SynthImage synth_feature_grid(const SyntheticScene& scene, const Viewpoint& vp_in, double sigma,
                              std::uint64_t seed, const std::string& image_id) {
  Viewpoint vp = vp_in.validated();
  const Mesh3D& mesh = scene.mesh();
  const Camera camera(vp, mesh.centroid());
  const std::vector<bool> visible = visible_vertices(mesh, vp);
  std::vector<std::pair<int, Vec2>> projected;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!visible[static_cast<std::size_t>(v)]) continue;
    if (const auto uv = camera.project(mesh.vertex(v))) projected.emplace_back(v, *uv);
  }

  GridMeta meta{image_id, vp.width, vp.height, vp};
  SynthImage img{FeatureGrid(1, 1, 1, 1.0f), FeatureGrid(1, 1, 1, 1.0f), {}, {}, {}, vp};
  img.coarse = render_level(scene, scene.config().coarse, false, projected, sigma,
                            derive_seed(seed, 0), meta, img.coarse_truth);
  img.fine = render_level(scene, scene.config().fine, true, projected, sigma, derive_seed(seed, 1),
                          meta, img.fine_truth);

  const double box = scene.config().part_box_size * vp.scale() / scene.reference_scale();
  for (const PartDefinition& part : scene.parts()) {
    if (!visible[static_cast<std::size_t>(part.vertex)]) continue;
    const auto uv = camera.project(mesh.vertex(part.vertex));
    if (!uv || uv->x() < 0 || uv->y() < 0 || uv->x() >= vp.width || uv->y() >= vp.height) continue;
    img.annotations.push_back({part.part_id, Box::centered(*uv, box, box)});
  }
  return img;
}

ReferenceRenderer make_reference_renderer(const SyntheticScene& scene) {
  const std::uint64_t seed = derive_seed(scene.config().seed, 0x5eed);
  return [&scene, seed](const Viewpoint& vp) {
    SynthImage img = synth_feature_grid(scene, vp, 0.0, seed, "reference");
    return ReferenceView{std::move(img.coarse), std::move(img.fine)};
  };
}

std::vector<std::pair<int, int>> ground_truth_pairs(const SynthImage& a, const SynthImage& b) {
  std::map<int, int> cell_of_vertex;
  for (const auto& [cell, t] : b.coarse_truth) cell_of_vertex[t.vertex] = cell;
  std::vector<std::pair<int, int>> out;
  for (const auto& [cell, t] : a.coarse_truth) {
    const auto it = cell_of_vertex.find(t.vertex);
    if (it != cell_of_vertex.end()) out.emplace_back(cell, it->second);
  }
  return out;
}

double bin_center(int bin, int bins) { return 360.0 * bin / bins; }

std::vector<SynthImage> synth_split(const SyntheticScene& scene, const DatasetSpec& spec,
                                    const SplitSpec& split) {
  if (spec.bins < 1) throw Error(ErrorCode::kInvalidArgument, "dataset needs at least one bin");
  if (split.per_bin < 0) throw Error(ErrorCode::kInvalidArgument, "per-bin count must be >= 0");
  const std::uint64_t split_seed = derive_seed(spec.seed, fnv1a(split.name));
  std::vector<SynthImage> out;
  for (int b = 0; b < spec.bins; ++b) {
    for (int r = 0; r < split.per_bin; ++r) {
      const int index = b * split.per_bin + r;
      const std::uint64_t image_seed = derive_seed(split_seed, static_cast<std::uint64_t>(index));
      Rng rng(derive_seed(image_seed, 99));
      std::uniform_real_distribution<double> jitter(-spec.jitter, spec.jitter);
      Viewpoint vp = scene.config().camera;
      vp.azimuth = normalize_azimuth(bin_center(b, spec.bins) + jitter(rng));
      vp.elevation = split.elevation;
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03d", split.name.c_str(), index);
      out.push_back(synth_feature_grid(scene, vp, spec.sigma, image_seed, id));
    }
  }
  return out;
}

CorpusManifest synth_dataset(const SyntheticScene& scene, const DatasetSpec& spec,
                             const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(ErrorCode::kIo, "cannot create corpus directory " + out_dir.string());
  }
  CorpusManifest manifest;
  manifest.scene = scene.config();
  manifest.bins = spec.bins;
  manifest.sigma = spec.sigma;
  manifest.dataset_seed = spec.seed;
  write_obj(scene.mesh(), out_dir / "mesh.obj");
  for (const SplitSpec& split : spec.splits) {
    fs::create_directories(out_dir / split.name, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + (out_dir / split.name).string());
    auto& entries = manifest.splits[split.name];
    for (const SynthImage& img : synth_split(scene, spec, split)) {
      const std::string id = img.coarse.meta().image_id;
      CorpusEntry e{id, fs::path(split.name) / (id + ".fgrd"),
                    fs::path(split.name) / (id + ".fine.fgrd"),
                    fs::path(split.name) / (id + ".json")};
      write_grid(img.coarse, out_dir / e.grid);
      write_grid(img.fine, out_dir / e.fine);
      write_annotations(img.annotations, out_dir / e.annotations);
      entries.push_back(std::move(e));
    }
  }
  detail::write_json_file(out_dir / "manifest.json", to_json(manifest));
  return manifest;
}

nlohmann::json to_json(const CorpusManifest& manifest) {
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, entries] : manifest.splits) {
    nlohmann::json list = nlohmann::json::array();
    for (const CorpusEntry& e : entries) {
      list.push_back({{"id", e.id},
                      {"grid", e.grid.generic_string()},
                      {"fine", e.fine.generic_string()},
                      {"annotations", e.annotations.generic_string()}});
    }
    splits[name] = std::move(list);
  }
  return {{"scene_seed", manifest.scene.seed}, {"scene", to_json(manifest.scene)},
          {"bins", manifest.bins},             {"sigma", manifest.sigma},
          {"dataset_seed", manifest.dataset_seed}, {"splits", std::move(splits)}};
}

CorpusManifest manifest_from_json(const nlohmann::json& j) {
  constexpr std::string_view ctx = "manifest";
  CorpusManifest m;
  m.scene = scene_config_from_json(detail::require(j, "scene", ctx));
  m.bins = detail::require_int(j, "bins", ctx);
  m.sigma = detail::require_number(j, "sigma", ctx);
  m.dataset_seed = detail::require(j, "dataset_seed", ctx).get<std::uint64_t>();
  const auto& splits = detail::require(j, "splits", ctx);
  if (!splits.is_object()) throw Error(ErrorCode::kSchema, "manifest: field 'splits' must be an object");
  for (const auto& [name, list] : splits.items()) {
    if (!list.is_array()) {
      throw Error(ErrorCode::kSchema, "manifest: split '" + name + "' must be an array");
    }
    auto& entries = m.splits[name];
    for (const auto& e : list) {
      constexpr std::string_view ectx = "manifest entry";
      entries.push_back({detail::require_string(e, "id", ectx), detail::require_string(e, "grid", ectx),
                         detail::require_string(e, "fine", ectx),
                         detail::require_string(e, "annotations", ectx)});
    }
  }
  return m;
}

CorpusManifest read_manifest(const std::filesystem::path& corpus_dir) {
  return detail::parse_json_file(corpus_dir / "manifest.json",
                                 [](const nlohmann::json& j) { return manifest_from_json(j); });
}

}  // namespace partmatch

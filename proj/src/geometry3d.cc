#include "partmatch/geometry3d.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_set>

#include "partmatch/error.h"

namespace partmatch {
namespace {

constexpr double kDegenerateArea = 1e-12;

double deg2rad(double degrees) { return degrees * std::numbers::pi / 180.0; }

// Moller-Trumbore; returns the ray parameter of the hit or nullopt.
// Barycentric tests are inclusive so rays cannot leak through shared edges.
std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                             const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(q) * inv_det;
}

}  // namespace

Mesh3D::Mesh3D(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mesh has no vertices");
  }
  const int n = num_vertices();
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int idx : triangles_[t]) {
      if (idx < 0 || idx >= n) {
        throw Error(ErrorCode::kIndexOutOfRange,
                    "triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    const Vec3& a = vertices_[triangles_[t][0]];
    const Vec3& b = vertices_[triangles_[t][1]];
    const Vec3& c = vertices_[triangles_[t][2]];
    if (0.5 * (b - a).cross(c - a).norm() < kDegenerateArea) {
      throw Error(ErrorCode::kInvalidArgument,
                  "triangle " + std::to_string(t) + " is degenerate");
    }
  }
}

const Vec3& Mesh3D::vertex(int index) const {
  if (index < 0 || index >= num_vertices()) {
    throw Error(ErrorCode::kIndexOutOfRange, "vertex index " + std::to_string(index));
  }
  return vertices_[static_cast<std::size_t>(index)];
}

Vec3 Mesh3D::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : vertices_) sum += v;
  return sum / static_cast<double>(vertices_.size());
}

double Mesh3D::bbox_diagonal() const {
  Vec3 lo = vertices_.front();
  Vec3 hi = vertices_.front();
  for (const Vec3& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

int Mesh3D::nearest_vertex(const Vec3& point) const {
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < num_vertices(); ++i) {
    const double d2 = (vertices_[static_cast<std::size_t>(i)] - point).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

Mesh3D Mesh3D::without_triangles(std::span<const int> triangle_indices) const {
  std::unordered_set<int> drop(triangle_indices.begin(), triangle_indices.end());
  std::vector<Triangle> kept;
  kept.reserve(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    if (!drop.contains(static_cast<int>(t))) kept.push_back(triangles_[t]);
  }
  return Mesh3D(vertices_, std::move(kept));
}

Mesh3D normalize_mesh(const Mesh3D& mesh) {
  const double diag = mesh.bbox_diagonal();
  if (diag <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "mesh has zero extent");
  }
  const Vec3 c = mesh.centroid();
  std::vector<Vec3> vertices;
  vertices.reserve(mesh.vertices().size());
  for (const Vec3& v : mesh.vertices()) vertices.push_back((v - c) / diag);
  return Mesh3D(std::move(vertices), mesh.triangles());
}

Mesh3D read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open mesh file " + path.string());
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                           ": malformed vertex");
      }
      vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string token;
      while (ss >> token) {
        // Accept "i", "i/t", "i/t/n", "i//n"; only the position index is used.
        const std::string head = token.substr(0, token.find('/'));
        try {
          std::size_t used = 0;
          const int idx = std::stoi(head, &used);
          if (used != head.size() || idx < 1 || idx > static_cast<int>(vertices.size())) {
            throw std::invalid_argument(head);
          }
          face.push_back(idx - 1);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                             ": bad face index '" + token + "'");
        }
      }
      if (face.size() < 3) {
        throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                           ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        triangles.push_back({face[0], face[k], face[k + 1]});
      }
    }
  }
  return Mesh3D(std::move(vertices), std::move(triangles));
}

void write_obj(const Mesh3D& mesh, const std::filesystem::path& path) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices()) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const Triangle& t : mesh.triangles()) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write mesh file " + path.string());
  file << out.str();
}

double normalize_azimuth(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;
  return a;
}

double Viewpoint::image_diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Viewpoint Viewpoint::validated() const {
  if (!(distance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "viewpoint distance must be > 0");
  if (!(focal > 0.0)) throw Error(ErrorCode::kInvalidArgument, "viewpoint focal must be > 0");
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "viewpoint image size must be positive");
  }
  if (!(elevation >= -90.0 && elevation <= 90.0)) {
    throw Error(ErrorCode::kInvalidArgument, "viewpoint elevation outside [-90, 90]");
  }
  Viewpoint out = *this;
  out.azimuth = normalize_azimuth(azimuth);
  return out;
}

Camera::Camera(const Viewpoint& vp, const Vec3& target) : vp_(vp.validated()) {
  const double a = deg2rad(vp_.azimuth);
  const double e = deg2rad(vp_.elevation);
  const Vec3 offset(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
  center_ = target + vp_.distance * offset;
  forward_ = -offset;
  // forward x world-up, normalized; its limit at the poles is the same
  // horizontal vector, so it is written in closed form.
  right_ = Vec3(-std::sin(a), std::cos(a), 0.0);
  up_ = right_.cross(forward_);
}

double Camera::depth(const Vec3& point) const { return (point - center_).dot(forward_); }

std::optional<Vec2> Camera::project(const Vec3& point) const {
  const Vec3 rel = point - center_;
  const double z = rel.dot(forward_);
  if (z <= 1e-12 * vp_.distance) return std::nullopt;
  const double x = rel.dot(right_);
  const double y = rel.dot(up_);
  return Vec2(0.5 * vp_.width + vp_.focal * x / z, 0.5 * vp_.height - vp_.focal * y / z);
}

std::optional<Vec2> project_vertex(const Vec3& point, const Viewpoint& vp, const Vec3& target) {
  return Camera(vp, target).project(point);
}

double visibility_tolerance(const Mesh3D& mesh) { return 1e-6 * mesh.bbox_diagonal(); }

namespace {

bool visible_from(const Vec3& eye, const Vec3& target, const Mesh3D& mesh, double eps) {
  const Vec3 dir = target - eye;
  const double length = dir.norm();
  if (length <= eps) return true;
  // Ray parameter t in [0, 1] maps to distance t * length along the segment.
  const double t_limit = (length - eps) / length;
  const auto& v = mesh.vertices();
  for (const Triangle& tri : mesh.triangles()) {
    const auto t = intersect_ray_triangle(eye, dir, v[tri[0]], v[tri[1]], v[tri[2]]);
    if (t && *t > 0.0 && *t < t_limit) return false;
  }
  return true;
}

}  // namespace

bool is_visible(int vertex_index, const Mesh3D& mesh, const Viewpoint& vp) {
  const Vec3& p = mesh.vertex(vertex_index);
  const Camera camera(vp, mesh.centroid());
  if (camera.depth(p) <= 0.0) return false;
  return visible_from(camera.center(), p, mesh, visibility_tolerance(mesh));
}

std::vector<bool> visible_vertices(const Mesh3D& mesh, const Viewpoint& vp) {
  const Camera camera(vp, mesh.centroid());
  const double eps = visibility_tolerance(mesh);
  std::vector<bool> out(mesh.vertices().size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& p = mesh.vertices()[i];
    if (camera.depth(p) <= 0.0) continue;
    out[i] = visible_from(camera.center(), p, mesh, eps);
  }
  return out;
}

std::vector<ProjectedPart> render_part_projections(const PartModel3D& model, const Mesh3D& mesh,
                                                   const Viewpoint& vp) {
  const Camera camera(vp, mesh.centroid());
  const double eps = visibility_tolerance(mesh);
  const double box_scale = vp.scale() / model.reference_scale;
  std::vector<ProjectedPart> out;
  out.reserve(model.parts.size());
  for (std::size_t i = 0; i < model.parts.size(); ++i) {
    const LearnedPart& part = model.parts[i];
    const Vec3& p = mesh.vertex(part.vertex);
    ProjectedPart projected;
    projected.part_id = part.part_id;
    projected.instance = static_cast<int>(i);
    if (const auto uv = camera.project(p)) {
      projected.center = *uv;
      const double margin = part.box_width * box_scale;
      const bool in_frame = uv->x() >= -margin && uv->x() <= vp.width + margin &&
                            uv->y() >= -margin && uv->y() <= vp.height + margin;
      projected.visible = in_frame && visible_from(camera.center(), p, mesh, eps);
    }
    out.push_back(projected);
  }
  return out;
}

}  // namespace partmatch

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "partmatch/part_model3d.h"

namespace partmatch {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

// Closed or open triangle mesh in model units.
//
// Construction validates: non-empty vertex list, every triangle index in
// range, and no triangle with area below 1e-12.
class Mesh3D {
 public:
  Mesh3D(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  const Vec3& vertex(int index) const;

  // Mean of the vertex positions; the camera look-at target.
  Vec3 centroid() const;
  double bbox_diagonal() const;

  // Nearest vertex to an arbitrary point; ties go to the lowest index.
  int nearest_vertex(const Vec3& point) const;

  // Copy with the given triangles removed (used for monotonicity checks).
  Mesh3D without_triangles(std::span<const int> triangle_indices) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
};

// Translate to centroid at the origin and scale to unit bounding-box diagonal.
Mesh3D normalize_mesh(const Mesh3D& mesh);

Mesh3D read_obj(const std::filesystem::path& path);
void write_obj(const Mesh3D& mesh, const std::filesystem::path& path);

double normalize_azimuth(double degrees);

struct Viewpoint {
  double azimuth = 0.0;    // degrees, [0, 360)
  double elevation = 0.0;  // degrees, [-90, 90]
  double distance = 3.0;   // model units
  double focal = 600.0;    // pixels
  int width = 224;
  int height = 224;

  // Pixels per model unit at the look-at target.
  double scale() const { return focal / distance; }
  double image_diagonal() const;

  // Throws kInvalidArgument for non-positive distance/focal/size or an
  // elevation outside [-90, 90]; returns a copy with azimuth normalized.
  Viewpoint validated() const;

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

// Look-at pinhole camera on the sphere of radius vp.distance around target.
// Image x grows to the right, y grows downward, principal point at the
// image center. World z is up; azimuth 0 places the camera on +x.
class Camera {
 public:
  Camera(const Viewpoint& vp, const Vec3& target);

  const Vec3& center() const { return center_; }
  const Vec3& forward() const { return forward_; }
  const Vec3& right() const { return right_; }
  const Vec3& up() const { return up_; }

  // Depth of a point along the viewing direction.
  double depth(const Vec3& point) const;
  // nullopt when the point is on or behind the camera plane.
  std::optional<Vec2> project(const Vec3& point) const;

 private:
  Viewpoint vp_;
  Vec3 center_;
  Vec3 forward_;
  Vec3 right_;
  Vec3 up_;
};

std::optional<Vec2> project_vertex(const Vec3& point, const Viewpoint& vp,
                                   const Vec3& target = Vec3::Zero());

// Offset tolerance for visibility ray casts: 1e-6 of the bbox diagonal.
double visibility_tolerance(const Mesh3D& mesh);

// True iff the segment camera -> vertex crosses no triangle before reaching
// the vertex (within visibility_tolerance).
bool is_visible(int vertex_index, const Mesh3D& mesh, const Viewpoint& vp);

// Visibility of every vertex under vp; index-aligned with mesh.vertices().
std::vector<bool> visible_vertices(const Mesh3D& mesh, const Viewpoint& vp);

struct ProjectedPart {
  int part_id = 0;
  int instance = 0;  // index into PartModel3D::parts
  Vec2 center = Vec2::Zero();
  bool visible = false;
};

std::vector<ProjectedPart> render_part_projections(const PartModel3D& model,
                                                   const Mesh3D& mesh,
                                                   const Viewpoint& vp);

}  // namespace partmatch

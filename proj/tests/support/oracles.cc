#include "oracles.h"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "partmatch/random.h"

namespace oracle {

std::vector<std::vector<int>> all_maximum_cliques(const partmatch::UndirectedGraph& g) {
  const int n = g.size();
  std::vector<std::vector<int>> best;
  std::size_t best_size = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> nodes;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) nodes.push_back(i);
    }
    if (nodes.size() < best_size) continue;
    bool clique = true;
    for (std::size_t i = 0; i < nodes.size() && clique; ++i) {
      for (std::size_t j = i + 1; j < nodes.size() && clique; ++j) clique = g.adjacent(nodes[i], nodes[j]);
    }
    if (!clique) continue;
    if (nodes.size() > best_size) {
      best.clear();
      best_size = nodes.size();
    }
    best.push_back(nodes);
  }
  return best;
}

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

Eigen::Matrix3d rz(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d ry(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

}  // namespace

Vec2 matrix_project(const Vec3& point, const Viewpoint& vp, const Vec3& target) {
  // Canonical camera sits on +x looking down -x with right = +y, up = +z.
  const Eigen::Matrix3d cam_to_world = rz(rad(vp.azimuth)) * ry(-rad(vp.elevation));
  const Vec3 center = target + cam_to_world * Vec3(vp.distance, 0, 0);
  Eigen::Matrix3d axes;  // rows: right, up, forward in world coordinates
  axes.row(0) = (cam_to_world * Vec3(0, 1, 0)).transpose();
  axes.row(1) = (cam_to_world * Vec3(0, 0, 1)).transpose();
  axes.row(2) = (cam_to_world * Vec3(-1, 0, 0)).transpose();
  Eigen::Matrix<double, 3, 4> extrinsic;
  extrinsic.leftCols<3>() = axes;
  extrinsic.col(3) = -axes * center;
  Eigen::Matrix3d k;
  k << vp.focal, 0, vp.width / 2.0, 0, -vp.focal, vp.height / 2.0, 0, 0, 1;
  const Eigen::Vector3d h = k * extrinsic * Eigen::Vector4d(point.x(), point.y(), point.z(), 1.0);
  return {h.x() / h.z(), h.y() / h.z()};
}

bool ray_cast_visible(const Mesh3D& mesh, const Viewpoint& vp, int vertex) {
  const Vec3 target = mesh.centroid();
  const double a = rad(vp.azimuth), e = rad(vp.elevation);
  const Vec3 cam = target + vp.distance * Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
  const Vec3 p = mesh.vertex(vertex);
  const Vec3 dir = p - cam;
  const double len = dir.norm();
  const double eps = 1e-6 * mesh.bbox_diagonal();
  for (const auto& tri : mesh.triangles()) {
    const Vec3 &A = mesh.vertex(tri[0]), &B = mesh.vertex(tri[1]), &C = mesh.vertex(tri[2]);
    const Vec3 n = (B - A).cross(C - A);
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-15) continue;
    const double t = n.dot(A - cam) / denom;
    if (!(t > 0.0 && t * len < len - eps)) continue;
    const Vec3 x = cam + t * dir;
    const double whole = n.norm();
    const double parts = (B - x).cross(C - x).norm() + (C - x).cross(A - x).norm() + (A - x).cross(B - x).norm();
    if (parts <= whole * (1.0 + 1e-9)) return false;
  }
  return true;
}

std::set<std::pair<int, int>> all_pairs_within(const FeatureGrid& a, const FeatureGrid& b, double xi) {
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < a.num_cells(); ++i) {
    if (a.is_dead(i)) continue;
    for (int j = 0; j < b.num_cells(); ++j) {
      if (b.is_dead(j)) continue;
      long double sq = 0;
      const auto u = a.cell(i), v = b.cell(j);
      for (int k = 0; k < a.dim(); ++k) sq += (static_cast<long double>(u[k]) - v[k]) * (static_cast<long double>(u[k]) - v[k]);
      if (std::sqrt(sq) <= xi) out.insert({i, j});
    }
  }
  return out;
}

bool quadruple_consistent(int src1, int dst1, int src2, int dst2, const FeatureGrid& a,
                          const FeatureGrid& b, double zeta) {
  if (src1 == src2 || dst1 == dst2) return false;
  const auto center = [](int index, const FeatureGrid& g) {
    const int row = index / g.cols(), col = index % g.cols();
    return Vec2(g.stride() * col + g.stride() / 2.0, g.stride() * row + g.stride() / 2.0);
  };
  const Vec2 du = center(src2, a) - center(src1, a);
  const Vec2 dv = center(dst2, b) - center(dst1, b);
  return std::hypot(du.x() - dv.x(), du.y() - dv.y()) <= zeta;
}

std::pair<Vec3, Vec3> best_two_partition(const std::vector<Vec3>& points) {
  const std::size_t n = points.size();
  double best = INFINITY;
  std::pair<Vec3, Vec3> out;
  for (std::uint32_t mask = 1; mask < (1u << n) - 1; ++mask) {
    Vec3 m0 = Vec3::Zero(), m1 = Vec3::Zero();
    int c0 = 0, c1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        m1 += points[i];
        ++c1;
      } else {
        m0 += points[i];
        ++c0;
      }
    }
    m0 /= c0;
    m1 /= c1;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) sse += (points[i] - ((mask & (1u << i)) ? m1 : m0)).squaredNorm();
    if (sse < best) {
      best = sse;
      out = m0.x() <= m1.x() ? std::pair{m0, m1} : std::pair{m1, m0};
    }
  }
  return out;
}

Mesh3D unit_cube() {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back((i & 1) - 0.5, ((i >> 1) & 1) - 0.5, ((i >> 2) & 1) - 0.5);
  // Two triangles per face, counter-clockwise seen from outside.
  std::vector<partmatch::Triangle> t = {
      {0, 2, 3}, {0, 3, 1},  // z-
      {4, 5, 7}, {4, 7, 6},  // z+
      {0, 1, 5}, {0, 5, 4},  // y-
      {2, 6, 7}, {2, 7, 3},  // y+
      {0, 4, 6}, {0, 6, 2},  // x-
      {1, 3, 7}, {1, 7, 5},  // x+
  };
  return Mesh3D(std::move(v), std::move(t));
}

FeatureGrid random_grid(int rows, int cols, int dim, std::uint64_t seed, float stride) {
  FeatureGrid g(rows, cols, dim, stride);
  partmatch::Rng rng(seed);
  for (int c = 0; c < g.num_cells(); ++c) partmatch::random_unit_vector(rng, g.cell(c));
  return g;
}

FeatureGrid basis_grid(int rows, int cols, int dim, float stride) {
  FeatureGrid g(rows, cols, dim, stride);
  for (int c = 0; c < g.num_cells(); ++c) g.cell(c)[static_cast<std::size_t>(c)] = 1.0f;
  return g;
}

}  // namespace oracle

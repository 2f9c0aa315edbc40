#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdfforge/geometry.hpp"

namespace sdfforge {

/// Axis-aligned bounding volume hierarchy over the triangles of a mesh.
/// Answers exact closest-point and first-hit ray queries. The mesh is copied
/// so the index owns everything it references.
class MeshBvh {
 public:
  struct ClosestHit {
    std::size_t triangle = 0;
    double distance = 0;
    Vec3 point;
  };
  struct RayHit {
    std::size_t triangle = 0;
    double t = 0;
  };

  explicit MeshBvh(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }

  /// Closest point over all faces (not just vertices); lowest triangle index
  /// wins exact ties.
  ClosestHit closest(const Vec3& q) const;

  /// First intersection with t in (t_min, t_max); both triangle sides count.
  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir, double t_min = 1e-9,
                                  double t_max = 1e30) const;

 private:
  struct Box {
    Vec3 lo, hi;
    double squared_distance(const Vec3& q) const;
    bool hit(const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) const;
  };
  struct Node {
    Box box;
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  TriangleMesh mesh_;
  std::vector<Triangle> tris_;
  std::vector<Vec3> centroids_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Möller–Trumbore ray/triangle test, two-sided. Returns the ray parameter.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri);

}  // namespace sdfforge

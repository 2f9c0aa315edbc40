#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace sdfforge {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  constexpr bool operator==(const Vec3&) const = default;
};

/// Query locations live in the normalized (unit sphere) model frame.
using Point3 = Vec3;

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
constexpr double squared_norm(const Vec3& v) { return dot(v, v); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
inline Vec3 vmin(const Vec3& a, const Vec3& b) { return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)}; }
inline Vec3 vmax(const Vec3& a, const Vec3& b) { return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}; }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

/// Row-major 3x3 matrix; used for rigid rotations.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  static Mat3 rotation(const Vec3& axis, double angle);
  static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2);

  Vec3 row(int i) const { return {m[3 * i], m[3 * i + 1], m[3 * i + 2]}; }
  Vec3 operator*(const Vec3& v) const { return {dot(row(0), v), dot(row(1), v), dot(row(2), v)}; }
  Mat3 transposed() const;
};

struct Triangle {
  Vec3 a, b, c;

  Vec3 raw_normal() const { return cross(b - a, c - a); }
  double area() const { return 0.5 * norm(raw_normal()); }
  Vec3 centroid() const { return (a + b + c) / 3.0; }
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  /// Optional per-triangle unit normals; empty when not provided.
  std::vector<Vec3> normals;

  Triangle triangle(std::size_t i) const {
    const auto& t = triangles[i];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
  /// Unit normal of triangle i, from `normals` when present, else from winding.
  Vec3 face_normal(std::size_t i) const;
  double surface_area() const;
  bool empty() const { return triangles.empty(); }
};

struct OrientedPoint {
  Vec3 position;
  Vec3 normal;
};

struct ClosestPoint {
  double distance = 0;
  Vec3 closest;
};

/// Exact Euclidean distance from q to a triangle and the closest point on it.
/// Throws DegenerateGeometry for (near) zero-area triangles.
ClosestPoint point_triangle_distance(const Vec3& q, const Triangle& tri);

/// Same as point_triangle_distance but without the degeneracy check; used
/// inside spatial indices whose triangles were already validated.
ClosestPoint closest_point_on_triangle(const Vec3& q, const Triangle& tri);

/// Result of fitting a mesh into the sphere of radius 1/1.03.
/// normalized = (original - offset) * scale.
struct Normalization {
  TriangleMesh mesh;
  double scale = 1;
  Vec3 offset;

  Vec3 to_original(const Vec3& p) const { return p / scale + offset; }
  Vec3 to_normalized(const Vec3& p) const { return (p - offset) * scale; }
};

inline constexpr double kUnitSphereMargin = 1.03;

/// Centers the mesh at its vertex bounding-box center and scales it so the
/// farthest vertex lies at radius 1/1.03.
Normalization normalize_to_unit_sphere(const TriangleMesh& mesh);

/// n near-uniform unit vectors on the Fibonacci lattice.
std::vector<Vec3> fibonacci_sphere(std::size_t n);

/// Closed-form signed distance primitives, optionally placed by a rigid
/// transform with uniform scale.
class AnalyticShape {
 public:
  struct Sphere { Vec3 center; double radius; };
  struct Box { Vec3 half_extents; };
  struct Torus { double major; double minor; };  // ring in the xz plane, axis +y
  struct Transformed {
    std::shared_ptr<const AnalyticShape> child;
    Mat3 rotation;  // world = scale * rotation * local + translation
    Vec3 translation;
    double scale = 1;
  };
  using Variant = std::variant<Sphere, Box, Torus, Transformed>;

  static AnalyticShape sphere(const Vec3& center, double radius);
  static AnalyticShape box(const Vec3& half_extents);
  static AnalyticShape torus(double major, double minor);
  static AnalyticShape transformed(AnalyticShape child, const Mat3& rotation, const Vec3& translation, double scale);

  double sdf(const Vec3& p) const;
  const Variant& variant() const { return shape_; }

 private:
  explicit AnalyticShape(Variant v) : shape_(std::move(v)) {}
  Variant shape_;
};

/// Linear-scan signed distance to an oriented point cloud: magnitude is the
/// distance to the nearest point (first index wins ties), sign is the sign of
/// dot(normal, q - nearest).
double signed_distance_oracle(std::span<const OrientedPoint> surface, const Vec3& q);
double signed_distance_oracle(const AnalyticShape& shape, const Vec3& q);

/// Brute-force unsigned distance to the closest triangle of a mesh.
double mesh_unsigned_distance(const TriangleMesh& mesh, const Vec3& q);

/// Triangulated meshes of analytic primitives, for rendering and evaluation.
TriangleMesh make_box_mesh(const Vec3& half_extents, const Vec3& center = {});
TriangleMesh make_uv_sphere(const Vec3& center, double radius, int n_lat, int n_lon);

}  // namespace sdfforge

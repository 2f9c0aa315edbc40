#include "sdfforge/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "sdfforge/error.hpp"

namespace sdfforge {

Mat3 Mat3::rotation(const Vec3& axis, double angle) {
  const Vec3 a = normalized(axis);
  const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  Mat3 r;
  r.m = {t * a.x * a.x + c,       t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
         t * a.x * a.y + s * a.z, t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
         t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c};
  return r;
}

Mat3 Mat3::from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
  Mat3 r;
  r.m = {r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z};
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  r.m = {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]};
  return r;
}

Vec3 TriangleMesh::face_normal(std::size_t i) const {
  if (!normals.empty()) return normals[i];
  return normalized(triangle(i).raw_normal());
}

double TriangleMesh::surface_area() const {
  double total = 0;
  for (std::size_t i = 0; i < triangles.size(); ++i) total += triangle(i).area();
  return total;
}

ClosestPoint closest_point_on_triangle(const Vec3& p, const Triangle& tri) {
  // Voronoi-region walk over vertices, edges, then the face interior.
  const Vec3& a = tri.a;
  const Vec3& b = tri.b;
  const Vec3& c = tri.c;
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const auto result = [&](const Vec3& q) { return ClosestPoint{norm(p - q), q}; };

  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return result(a);

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return result(b);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return result(a + ab * (d1 / (d1 - d3)));

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return result(c);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return result(a + ac * (d2 / (d2 - d6)));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return result(b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))));
  }

  const double denom = 1.0 / (va + vb + vc);
  return result(a + ab * (vb * denom) + ac * (vc * denom));
}

ClosestPoint point_triangle_distance(const Vec3& q, const Triangle& tri) {
  if (!(tri.area() > 1e-12)) throw DegenerateGeometry("point_triangle_distance: degenerate triangle");
  return closest_point_on_triangle(q, tri);
}

Normalization normalize_to_unit_sphere(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw PreconditionError("normalize_to_unit_sphere: mesh has no vertices");
  Vec3 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = vmin(lo, v);
    hi = vmax(hi, v);
  }
  const Vec3 center = (lo + hi) * 0.5;
  double radius = 0;
  for (const auto& v : mesh.vertices) radius = std::max(radius, norm(v - center));
  if (!(radius > 0)) throw DegenerateGeometry("normalize_to_unit_sphere: all vertices coincide");

  Normalization out;
  out.offset = center;
  out.scale = 1.0 / (kUnitSphereMargin * radius);
  out.mesh = mesh;
  for (auto& v : out.mesh.vertices) v = out.to_normalized(v);
  return out;
}

std::vector<Vec3> fibonacci_sphere(std::size_t n) {
  if (n == 0) throw PreconditionError("fibonacci_sphere: n must be >= 1");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = golden_angle * static_cast<double>(i);
    out.push_back(normalized(Vec3{r * std::cos(phi), y, r * std::sin(phi)}));
  }
  return out;
}

AnalyticShape AnalyticShape::sphere(const Vec3& center, double radius) {
  if (!(radius > 0)) throw PreconditionError("sphere radius must be positive");
  return AnalyticShape(Sphere{center, radius});
}

AnalyticShape AnalyticShape::box(const Vec3& half_extents) {
  if (!(half_extents.x > 0 && half_extents.y > 0 && half_extents.z > 0)) {
    throw PreconditionError("box half extents must be positive");
  }
  return AnalyticShape(Box{half_extents});
}

AnalyticShape AnalyticShape::torus(double major, double minor) {
  if (!(major > 0 && minor > 0)) throw PreconditionError("torus radii must be positive");
  return AnalyticShape(Torus{major, minor});
}

AnalyticShape AnalyticShape::transformed(AnalyticShape child, const Mat3& rotation, const Vec3& translation,
                                         double scale) {
  if (!(scale > 0)) throw PreconditionError("transform scale must be positive");
  return AnalyticShape(Transformed{std::make_shared<const AnalyticShape>(std::move(child)), rotation, translation, scale});
}

double AnalyticShape::sdf(const Vec3& p) const {
  struct Visitor {
    const Vec3& p;
    double operator()(const Sphere& s) const { return norm(p - s.center) - s.radius; }
    double operator()(const Box& b) const {
      const Vec3 q{std::abs(p.x) - b.half_extents.x, std::abs(p.y) - b.half_extents.y,
                   std::abs(p.z) - b.half_extents.z};
      const Vec3 outside = vmax(q, Vec3{});
      return norm(outside) + std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
    }
    double operator()(const Torus& t) const {
      const double ring = std::hypot(p.x, p.z) - t.major;
      return std::hypot(ring, p.y) - t.minor;
    }
    double operator()(const Transformed& t) const {
      const Vec3 local = t.rotation.transposed() * ((p - t.translation) / t.scale);
      return t.scale * t.child->sdf(local);
    }
  };
  return std::visit(Visitor{p}, shape_);
}

double signed_distance_oracle(std::span<const OrientedPoint> surface, const Vec3& q) {
  if (surface.empty()) throw PreconditionError("signed_distance_oracle: empty surface");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < surface.size(); ++i) {
    const double d2 = squared_norm(q - surface[i].position);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  const double d = std::sqrt(best_d2);
  return dot(surface[best].normal, q - surface[best].position) < 0 ? -d : d;
}

double signed_distance_oracle(const AnalyticShape& shape, const Vec3& q) { return shape.sdf(q); }

double mesh_unsigned_distance(const TriangleMesh& mesh, const Vec3& q) {
  if (mesh.empty()) throw PreconditionError("mesh_unsigned_distance: empty mesh");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    best = std::min(best, closest_point_on_triangle(q, mesh.triangle(i)).distance);
  }
  return best;
}

TriangleMesh make_box_mesh(const Vec3& h, const Vec3& c) {
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.push_back(c + Vec3{(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z});
  }
  // Outward (counter-clockwise seen from outside) winding.
  mesh.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return mesh;
}

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int n_lat, int n_lon) {
  if (n_lat < 2 || n_lon < 3) throw PreconditionError("make_uv_sphere: need n_lat >= 2 and n_lon >= 3");
  TriangleMesh mesh;
  mesh.vertices.push_back(center + Vec3{0, radius, 0});
  for (int i = 1; i < n_lat; ++i) {
    const double theta = std::numbers::pi * i / n_lat;
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2 * std::numbers::pi * j / n_lon;
      mesh.vertices.push_back(center + radius * Vec3{std::sin(theta) * std::cos(phi), std::cos(theta),
                                                     std::sin(theta) * std::sin(phi)});
    }
  }
  mesh.vertices.push_back(center + Vec3{0, -radius, 0});
  const auto ring = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * n_lon + (j % n_lon)); };
  const auto bottom = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  for (int j = 0; j < n_lon; ++j) mesh.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i < n_lat - 1; ++i) {
    for (int j = 0; j < n_lon; ++j) {
      mesh.triangles.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j)});
      mesh.triangles.push_back({ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  }
  for (int j = 0; j < n_lon; ++j) mesh.triangles.push_back({bottom, ring(n_lat - 1, j), ring(n_lat - 1, j + 1)});
  return mesh;
}

}  // namespace sdfforge

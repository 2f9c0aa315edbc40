#include "sdfforge/bvh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "sdfforge/error.hpp"

namespace sdfforge {

namespace {
constexpr std::uint32_t kLeafSize = 4;
}

double MeshBvh::Box::squared_distance(const Vec3& q) const {
  const Vec3 d = vmax(vmax(lo - q, q - hi), Vec3{});
  return squared_norm(d);
}

bool MeshBvh::Box::hit(const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) const {
  for (int a = 0; a < 3; ++a) {
    double t0 = (lo[a] - origin[a]) * inv_dir[a];
    double t1 = (hi[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf means the ray lies in the slab plane; treat as inside.
    if (!std::isnan(t0)) t_min = std::max(t_min, t0);
    if (!std::isnan(t1)) t_max = std::min(t_max, t1);
    if (t_max < t_min) return false;
  }
  return true;
}

MeshBvh::MeshBvh(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  tris_.reserve(mesh_.triangles.size());
  for (std::size_t i = 0; i < mesh_.triangles.size(); ++i) {
    tris_.push_back(mesh_.triangle(i));
    centroids_.push_back(tris_.back().centroid());
  }
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!tris_.empty()) build(0, static_cast<std::uint32_t>(tris_.size()));
}

std::int32_t MeshBvh::build(std::uint32_t begin, std::uint32_t end) {
  Box box{tris_[order_[begin]].a, tris_[order_[begin]].a};
  Vec3 clo = centroids_[order_[begin]], chi = clo;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Triangle& t = tris_[order_[i]];
    box.lo = vmin(box.lo, vmin(t.a, vmin(t.b, t.c)));
    box.hi = vmax(box.hi, vmax(t.a, vmax(t.b, t.c)));
    clo = vmin(clo, centroids_[order_[i]]);
    chi = vmax(chi, centroids_[order_[i]]);
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{box, begin, end});
  if (end - begin <= kLeafSize) return id;

  const Vec3 extent = chi - clo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = centroids_[a][axis], vb = centroids_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

MeshBvh::ClosestHit MeshBvh::closest(const Vec3& q) const {
  if (tris_.empty()) throw PreconditionError("MeshBvh::closest on empty mesh");
  ClosestHit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity(), {}};
  double best_d2 = std::numeric_limits<double>::infinity();

  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.box.squared_distance(q) > best_d2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const ClosestPoint cp = closest_point_on_triangle(q, tris_[idx]);
        const double d2 = cp.distance * cp.distance;
        if (d2 < best_d2 || (d2 == best_d2 && idx < best.triangle)) {
          best_d2 = d2;
          best = {idx, cp.distance, cp.closest};
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squared_distance(q);
    const double dr = nodes_[node.right].box.squared_distance(q);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return best;
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
  const Vec3 p = cross(dir, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - tri.a;
  const double u = dot(s, p) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3 qv = cross(s, e1);
  const double v = dot(dir, qv) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  return dot(e2, qv) * inv;
}

std::optional<MeshBvh::RayHit> MeshBvh::intersect(const Vec3& origin, const Vec3& dir, double t_min,
                                                  double t_max) const {
  if (tris_.empty()) return std::nullopt;
  const Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
  std::optional<RayHit> best;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!node.box.hit(origin, inv, t_min, best ? best->t : t_max)) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const auto t = intersect_triangle(origin, dir, tris_[idx]);
        if (!t || *t <= t_min || *t >= t_max) continue;
        if (!best || *t < best->t || (*t == best->t && idx < best->triangle)) best = RayHit{idx, *t};
      }
      continue;
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  return best;
}

}  // namespace sdfforge

#include "sdfforge/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "sdfforge/error.hpp"

namespace sdfforge {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw PreconditionError("KdTree3: too many points");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree3::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = vmin(lo, points_[order_[i]]);
    hi = vmax(hi, points_[order_[i]]);
  }
  const Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_[a][axis], vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = static_cast<std::uint8_t>(axis);
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree3::search(std::int32_t id, const Vec3& q, Hit& best) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = squared_norm(q - points_[idx]);
      if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
        best.squared_distance = d2;
        best.index = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, q, best);
  // Points equal to the split value can sit on either side, so ties must
  // still descend.
  if (diff * diff <= best.squared_distance) search(far, q, best);
}

KdTree3::Hit KdTree3::nearest(const Vec3& q) const {
  if (points_.empty()) throw PreconditionError("KdTree3::nearest on empty tree");
  Hit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  search(0, q, best);
  return best;
}

namespace {
std::vector<Vec3> positions_of(const std::vector<OrientedPoint>& surface) {
  std::vector<Vec3> out;
  out.reserve(surface.size());
  for (const auto& p : surface) out.push_back(p.position);
  return out;
}
}  // namespace

OrientedPointSdf::OrientedPointSdf(std::vector<OrientedPoint> surface)
    : surface_(std::move(surface)), tree_(positions_of(surface_)) {
  if (surface_.empty()) throw PreconditionError("OrientedPointSdf: empty surface");
}

double OrientedPointSdf::operator()(const Vec3& q) const {
  const auto hit = tree_.nearest(q);
  const auto& p = surface_[hit.index];
  const double d = std::sqrt(hit.squared_distance);
  return dot(p.normal, q - p.position) < 0 ? -d : d;
}

}  // namespace sdfforge

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdfforge/geometry.hpp"

namespace sdfforge {

/// Balanced 3-d tree over a fixed point list. Nearest-neighbor queries are
/// exact; among equidistant points the lowest original index is returned.
class KdTree3 {
 public:
  struct Hit {
    std::size_t index = 0;
    double squared_distance = 0;
  };

  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points);

  Hit nearest(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    std::uint32_t begin, end;  // range into order_
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Signed distance to an oriented point cloud via KdTree3; same semantics as
/// the linear-scan signed_distance_oracle.
class OrientedPointSdf {
 public:
  explicit OrientedPointSdf(std::vector<OrientedPoint> surface);

  double operator()(const Vec3& q) const;
  const std::vector<OrientedPoint>& surface() const { return surface_; }

 private:
  std::vector<OrientedPoint> surface_;
  KdTree3 tree_;
};

}  // namespace sdfforge

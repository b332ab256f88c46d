#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixfield/geometry.hpp"

namespace mixfield {

/// Static 3-d tree over a point set with exact nearest-neighbor and radius
/// queries. The tree keeps its own copy of the points.
class KdTree {
public:
  explicit KdTree(std::span<const Vec3> points);

  struct Hit {
    std::uint32_t index = 0;
    double distance = 0.0;
  };

  /// Exact nearest neighbor; smallest index on ties. The tree must be non-empty.
  Hit nearest(const Vec3& q) const;

  /// Indices of all points within `radius` of q (unordered).
  void within(const Vec3& q, double radius, std::vector<std::uint32_t>& out) const;

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }

private:
  struct Node {
    Eigen::AlignedBox3d bounds;
    std::uint32_t begin = 0, end = 0;    // range in order_
    std::int32_t left = -1, right = -1;  // children, -1 for leaves
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_in(std::int32_t node, const Vec3& q, Hit& best, double& best_sq) const;
  void within_in(std::int32_t node, const Vec3& q, double r2, std::vector<std::uint32_t>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Reference nearest neighbor by linear scan (smallest index on ties).
KdTree::Hit brute_force_nearest(std::span<const Vec3> points, const Vec3& q);

}  // namespace mixfield

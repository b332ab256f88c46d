#include "mixfield/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixfield/errors.hpp"

namespace mixfield {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  Eigen::AlignedBox3d box;
  for (auto i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  nodes_[id].bounds = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Eigen::Index axis = 0;
  box.sizes().maxCoeff(&axis);
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::nearest_in(std::int32_t node, const Vec3& q, Hit& best, double& best_sq) const {
  const Node& n = nodes_[node];
  if (n.bounds.squaredExteriorDistance(q) > best_sq) return;
  if (n.left < 0) {
    for (auto i = n.begin; i < n.end; ++i) {
      const auto idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_sq || (d2 == best_sq && idx < best.index)) {
        best_sq = d2;
        best.index = idx;
      }
    }
    return;
  }
  const double dl = nodes_[n.left].bounds.squaredExteriorDistance(q);
  const double dr = nodes_[n.right].bounds.squaredExteriorDistance(q);
  if (dl <= dr) {
    nearest_in(n.left, q, best, best_sq);
    nearest_in(n.right, q, best, best_sq);
  } else {
    nearest_in(n.right, q, best, best_sq);
    nearest_in(n.left, q, best, best_sq);
  }
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
  if (points_.empty()) throw EmptyInputError("nearest-neighbor query on an empty point set");
  Hit best{std::numeric_limits<std::uint32_t>::max(), 0.0};
  double best_sq = std::numeric_limits<double>::infinity();
  nearest_in(0, q, best, best_sq);
  best.distance = std::sqrt(best_sq);
  return best;
}

void KdTree::within_in(std::int32_t node, const Vec3& q, double r2,
                       std::vector<std::uint32_t>& out) const {
  const Node& n = nodes_[node];
  if (n.bounds.squaredExteriorDistance(q) > r2) return;
  if (n.left < 0) {
    for (auto i = n.begin; i < n.end; ++i) {
      if ((points_[order_[i]] - q).squaredNorm() <= r2) out.push_back(order_[i]);
    }
    return;
  }
  within_in(n.left, q, r2, out);
  within_in(n.right, q, r2, out);
}

void KdTree::within(const Vec3& q, double radius, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (points_.empty()) return;
  within_in(0, q, radius * radius, out);
}

KdTree::Hit brute_force_nearest(std::span<const Vec3> points, const Vec3& q) {
  if (points.empty()) throw EmptyInputError("nearest-neighbor query on an empty point set");
  KdTree::Hit best{0, 0.0};
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - q).squaredNorm();
    if (d2 < best_sq) {
      best_sq = d2;
      best.index = i;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

}  // namespace mixfield

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mixfield {

using Vec3 = Eigen::Vector3d;

struct Aabb {
  Vec3 min = Vec3::Constant(-1.0);
  Vec3 max = Vec3::Constant(1.0);

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool valid() const { return (max.array() > min.array()).all() && min.allFinite() && max.allFinite(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  static Aabb cube(double half) { return {Vec3::Constant(-half), Vec3::Constant(half)}; }
};

inline double sign_nonneg(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace mixfield

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <limits>

namespace hatnav {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct Aabb3 {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool valid() const { return (min.array() <= max.array()).all(); }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  Vec3 extents() const { return max - min; }
  double volume() const {
    if (!valid()) return 0.0;
    const Vec3 e = extents();
    return e.x() * e.y() * e.z();
  }
};

struct Rect2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  Vec2 extents() const { return max - min; }
  bool degenerate() const { return !((max.array() > min.array()).all()); }
};

}  // namespace hatnav

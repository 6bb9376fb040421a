#include "ssf/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ssf {

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  return t;
}

PointCloud RigidTransform::apply(std::span<const Vec3> pts) const {
  PointCloud out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(apply(p));
  return out;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform t;
  t.rotation = rotation * other.rotation;
  t.translation = rotation * other.translation + translation;
  return t;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform t;
  t.rotation = rotation.transpose();
  t.translation = -(t.rotation * translation);
  return t;
}

double RigidTransform::rotation_angle_rad() const {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover the small-angle part from the skew component.
  const Vec3 skew(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0), rotation(1, 0) - rotation(0, 1));
  return std::atan2(0.5 * skew.norm(), c);
}

double rotation_distance_rad(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform rel;
  rel.rotation = a.rotation.transpose() * b.rotation;
  return rel.rotation_angle_rad();
}

double translation_distance_mm(const RigidTransform& a, const RigidTransform& b) {
  return (a.translation - b.translation).norm();
}

bool all_finite(const Vec3& v) { return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z()); }

Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 u = v.normalized();
  const Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(helper).normalized();
}

}  // namespace ssf

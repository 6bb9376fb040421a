#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <span>
#include <vector>

namespace ssf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using PointCloud = std::vector<Vec3>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Position (mm) plus orientation. The local +x axis is the insertion axis.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec3 insertion_axis() const { return orientation * Vec3::UnitX(); }
  Vec3 to_world(const Vec3& local) const { return position + orientation * local; }
};

/// Proper rigid motion x -> R x + t. Rotation determinant is +1.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  PointCloud apply(std::span<const Vec3> pts) const;

  /// this ∘ other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const;
  RigidTransform inverse() const;

  double rotation_angle_rad() const;
};

/// Angle between the rotations of two transforms, and distance between translations.
double rotation_distance_rad(const RigidTransform& a, const RigidTransform& b);
double translation_distance_mm(const RigidTransform& a, const RigidTransform& b);

bool all_finite(const Vec3& v);

/// Unit vector orthogonal to `v` (deterministic choice).
Vec3 any_orthogonal(const Vec3& v);

}  // namespace ssf

#pragma once

#include <span>

#include "ssf/geometry.hpp"

namespace ssf {

struct CircleFit {
  double radius_mm = 0.0;
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double rmse_mm = 0.0;       // orthogonal distance to the 3D circle
  double arc_span_rad = 0.0;  // angular coverage of the points about the center
};

inline constexpr double kMinArcSpanRad = 10.0 * 3.14159265358979323846 / 180.0;

/// Plane by principal components, algebraic (Kasa) circle in that plane,
/// then Levenberg-Marquardt on the geometric residuals.
/// Throws CollinearPoints or InsufficientArc (also for fewer than 5 points).
CircleFit fit_circle_3d(std::span<const Vec3> points);

/// Orthogonal distance from p to the fitted circle.
double circle_distance(const CircleFit& c, const Vec3& p);

}  // namespace ssf

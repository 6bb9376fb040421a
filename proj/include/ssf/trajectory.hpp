#pragma once

#include <string>
#include <vector>

#include "ssf/geometry.hpp"

namespace ssf {

enum class Shape { I, J };

inline constexpr double kDefaultStepMm = 0.1;

/// One pedicle's drilling plan.
///
/// Local plan frame: +x is the insertion axis, the arc for alpha = 0 bends
/// toward +y, and positive alpha rotates the curve plane clockwise about +x as
/// seen from the entry point looking down the insertion axis (so alpha = 90
/// bends toward +z). `entry_pose` maps the local frame into the world.
struct TrajectoryPlan {
  Shape shape = Shape::J;
  double radius_mm = 0.0;  // ignored for I
  double alpha_deg = 0.0;  // [0, 360)
  double straight_len_mm = 0.0;
  double arc_len_mm = 0.0;
  Pose entry_pose;

  double total_length_mm() const { return straight_len_mm + arc_len_mm; }
  /// Bend angle of the curved portion; 0 for I plans.
  double arc_angle_rad() const;
  bool curved() const { return shape == Shape::J && arc_len_mm > 0.0; }
};

struct BilateralPlan {
  std::string label;
  TrajectoryPlan left;
  TrajectoryPlan right;
};

/// Polyline with cumulative arc length; `cumulative_arclen[i]` is the summed
/// segment length up to `points[i]`.
struct Polyline3 {
  std::vector<Vec3> points;
  std::vector<double> cumulative_arclen;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  double length() const { return cumulative_arclen.empty() ? 0.0 : cumulative_arclen.back(); }

  /// Linear interpolation at arc length s (clamped to [0, length]).
  Vec3 point_at(double s) const;
  /// Direction of the segment containing s.
  Vec3 tangent_at(double s) const;

  static Polyline3 from_points(std::vector<Vec3> pts);
};

TrajectoryPlan make_plan(Shape shape, double radius_mm, double alpha_deg, double straight_len_mm,
                         double arc_len_mm, const Pose& entry_pose = {});

/// Throws Error if the plan violates its invariants.
void validate(const TrajectoryPlan& plan);

/// Unit vector, in the plan frame, toward which the arc bends.
Vec3 curve_direction_local(double alpha_deg);

/// Closed-form point and tangent at arc length s, in the plan frame.
Vec3 local_point(const TrajectoryPlan& plan, double s);
Vec3 local_tangent(const TrajectoryPlan& plan, double s);

/// Closed-form point and tangent in the world frame.
Vec3 point_at(const TrajectoryPlan& plan, double s);
Vec3 tangent_at(const TrajectoryPlan& plan, double s);

Vec3 arc_endpoint(const TrajectoryPlan& plan);

/// Discretized centerline with spacing at most `step_mm`.
///
/// The straight part is split into equal steps and the arc into equal chords
/// of exactly the segment arc length, so the polyline length equals the plan
/// length and the arc vertices lie on a circle tangent to the straight part
/// at the junction.
Polyline3 centerline(const TrajectoryPlan& plan, double step_mm = kDefaultStepMm);

/// "I", or "J" with alpha as superscript and radius as subscript (J⁰₅₀).
/// Non-integer values use the ASCII form J^{22.5}_{50}.
std::string plan_label(const TrajectoryPlan& plan);

BilateralPlan make_bilateral(const TrajectoryPlan& left, const TrajectoryPlan& right);
void validate(const BilateralPlan& plan);

std::string to_string(Shape shape);
Shape shape_from_string(const std::string& s);

}  // namespace ssf

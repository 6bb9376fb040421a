#include "ssf/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ssf/error.hpp"

namespace ssf {

double TrajectoryPlan::arc_angle_rad() const {
  if (shape != Shape::J || radius_mm <= 0.0) return 0.0;
  return arc_len_mm / radius_mm;
}

// ---------------------------------------------------------------- Polyline3

Polyline3 Polyline3::from_points(std::vector<Vec3> pts) {
  Polyline3 poly;
  poly.points.reserve(pts.size());
  poly.cumulative_arclen.reserve(pts.size());
  double acc = 0.0;
  for (auto& p : pts) {
    if (!poly.points.empty()) {
      const double d = (p - poly.points.back()).norm();
      if (d <= 0.0) continue;  // keep arc length strictly increasing
      acc += d;
    }
    poly.points.push_back(p);
    poly.cumulative_arclen.push_back(acc);
  }
  return poly;
}

namespace {
std::size_t segment_index(const std::vector<double>& cum, double s) {
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  std::size_t i = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
  return std::min(i, cum.size() - 2);
}
}  // namespace

Vec3 Polyline3::point_at(double s) const {
  if (points.empty()) throw Error(ErrorCode::EmptyCenterline, "empty polyline");
  if (points.size() == 1 || s <= 0.0) return points.front();
  if (s >= length()) return points.back();
  const std::size_t i = segment_index(cumulative_arclen, s);
  const double seg = cumulative_arclen[i + 1] - cumulative_arclen[i];
  const double u = (s - cumulative_arclen[i]) / seg;
  return points[i] + u * (points[i + 1] - points[i]);
}

Vec3 Polyline3::tangent_at(double s) const {
  if (points.size() < 2) throw Error(ErrorCode::EmptyCenterline, "polyline has no segments");
  const std::size_t i = segment_index(cumulative_arclen, std::clamp(s, 0.0, length()));
  return (points[i + 1] - points[i]).normalized();
}

// ---------------------------------------------------------------- plans

TrajectoryPlan make_plan(Shape shape, double radius_mm, double alpha_deg, double straight_len_mm,
                         double arc_len_mm, const Pose& entry_pose) {
  TrajectoryPlan plan;
  plan.shape = shape;
  plan.radius_mm = radius_mm;
  plan.alpha_deg = alpha_deg;
  plan.straight_len_mm = straight_len_mm;
  plan.arc_len_mm = arc_len_mm;
  plan.entry_pose = entry_pose;
  plan.entry_pose.orientation.normalize();
  validate(plan);
  double a = std::fmod(alpha_deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;
  plan.alpha_deg = a;
  return plan;
}

void validate(const TrajectoryPlan& plan) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(plan.alpha_deg) || !finite(plan.straight_len_mm) || !finite(plan.arc_len_mm) ||
      (plan.shape == Shape::J && !finite(plan.radius_mm)) || !all_finite(plan.entry_pose.position) ||
      !std::isfinite(plan.entry_pose.orientation.norm())) {
    throw Error(ErrorCode::NonFinite, "plan fields must be finite");
  }
  if (std::abs(plan.entry_pose.orientation.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "entry orientation must be a unit quaternion");
  }
  if (plan.straight_len_mm < 0.0) throw Error(ErrorCode::NegativeLength, "straight length must be >= 0");
  if (plan.arc_len_mm < 0.0) throw Error(ErrorCode::NegativeLength, "arc length must be >= 0");
  if (plan.shape == Shape::J) {
    if (plan.radius_mm <= 0.0) throw Error(ErrorCode::NonPositiveRadius, "J plans need radius > 0");
    if (plan.arc_len_mm / plan.radius_mm >= kPi) {
      throw Error(ErrorCode::ArcTooLong, "arc length / radius must be < pi");
    }
  }
}

Vec3 curve_direction_local(double alpha_deg) {
  const double a = deg2rad(alpha_deg);
  return {0.0, std::cos(a), std::sin(a)};
}

Vec3 local_point(const TrajectoryPlan& plan, double s) {
  s = std::clamp(s, 0.0, plan.total_length_mm());
  if (!plan.curved() || s <= plan.straight_len_mm) return {s, 0.0, 0.0};
  const double theta = (s - plan.straight_len_mm) / plan.radius_mm;
  const double r = plan.radius_mm;
  return Vec3(plan.straight_len_mm + r * std::sin(theta), 0.0, 0.0) +
         r * (1.0 - std::cos(theta)) * curve_direction_local(plan.alpha_deg);
}

Vec3 local_tangent(const TrajectoryPlan& plan, double s) {
  s = std::clamp(s, 0.0, plan.total_length_mm());
  if (!plan.curved() || s <= plan.straight_len_mm) return Vec3::UnitX();
  const double theta = (s - plan.straight_len_mm) / plan.radius_mm;
  return Vec3(std::cos(theta), 0.0, 0.0) + std::sin(theta) * curve_direction_local(plan.alpha_deg);
}

Vec3 point_at(const TrajectoryPlan& plan, double s) { return plan.entry_pose.to_world(local_point(plan, s)); }

Vec3 tangent_at(const TrajectoryPlan& plan, double s) {
  return plan.entry_pose.orientation * local_tangent(plan, s);
}

Vec3 arc_endpoint(const TrajectoryPlan& plan) {
  validate(plan);
  return point_at(plan, plan.total_length_mm());
}

Polyline3 centerline(const TrajectoryPlan& plan, double step_mm) {
  validate(plan);
  if (!(step_mm > 0.0 && step_mm <= 1.0)) throw Error(ErrorCode::InvalidStep, "step must be in (0, 1] mm");

  Polyline3 poly;
  auto push = [&](const Vec3& local, double s) {
    poly.points.push_back(plan.entry_pose.to_world(local));
    poly.cumulative_arclen.push_back(s);
  };
  auto steps_for = [&](double len) {
    return std::max<long>(1, static_cast<long>(std::ceil(len / step_mm - 1e-9)));
  };

  const double straight = plan.curved() ? plan.straight_len_mm : plan.total_length_mm();
  push(Vec3::Zero(), 0.0);
  if (straight > 0.0) {
    const long n = steps_for(straight);
    const double h = straight / static_cast<double>(n);
    for (long k = 1; k <= n; ++k) {
      const double s = k == n ? straight : static_cast<double>(k) * h;
      push({s, 0.0, 0.0}, s);
    }
  }
  if (!plan.curved()) return poly;

  // Equal chords of length h on the circle of radius h / (2 sin(dtheta/2))
  // tangent to the insertion axis at the junction.
  const long n = steps_for(plan.arc_len_mm);
  const double h = plan.arc_len_mm / static_cast<double>(n);
  const double dtheta = h / plan.radius_mm;
  const double chord_radius = h / (2.0 * std::sin(0.5 * dtheta));
  const Vec3 bend = curve_direction_local(plan.alpha_deg);
  const Vec3 junction(plan.straight_len_mm, 0.0, 0.0);
  for (long k = 1; k <= n; ++k) {
    const double theta = static_cast<double>(k) * dtheta;
    const Vec3 local = junction + Vec3(chord_radius * std::sin(theta), 0.0, 0.0) +
                       chord_radius * (1.0 - std::cos(theta)) * bend;
    const double s = k == n ? plan.total_length_mm() : plan.straight_len_mm + static_cast<double>(k) * h;
    push(local, s);
  }
  return poly;
}

// ---------------------------------------------------------------- labels

namespace {

bool is_integral(double v) { return std::abs(v - std::round(v)) < 1e-9 && std::abs(v) < 1e6; }

std::string script_digits(long value, bool superscript) {
  static const std::array<const char*, 10> sup = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
  static const std::array<const char*, 10> sub = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
  std::string out;
  for (char c : std::to_string(value)) {
    const int d = c - '0';
    out += superscript ? sup[d] : sub[d];
  }
  return out;
}

std::string compact(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string plan_label(const TrajectoryPlan& plan) {
  if (plan.shape == Shape::I) return "I";
  if (is_integral(plan.alpha_deg) && is_integral(plan.radius_mm) && plan.radius_mm > 0.0) {
    return "J" + script_digits(std::lround(plan.alpha_deg), true) + script_digits(std::lround(plan.radius_mm), false);
  }
  return "J^{" + compact(plan.alpha_deg) + "}_{" + compact(plan.radius_mm) + "}";
}

BilateralPlan make_bilateral(const TrajectoryPlan& left, const TrajectoryPlan& right) {
  validate(left);
  validate(right);
  return {plan_label(left) + "-" + plan_label(right), left, right};
}

void validate(const BilateralPlan& plan) {
  validate(plan.left);
  validate(plan.right);
  // The hyphen is optional: "J⁰₅₀-J⁹⁰₅₀" and "J⁰₅₀J⁹⁰₅₀" name the same pair.
  const std::string expected = plan_label(plan.left) + "-" + plan_label(plan.right);
  if (plan.label != expected && plan.label != plan_label(plan.left) + plan_label(plan.right)) {
    throw Error(ErrorCode::LabelMismatch, "label '" + plan.label + "' does not match plans ('" + expected + "')");
  }
}

std::string to_string(Shape shape) { return shape == Shape::I ? "I" : "J"; }

Shape shape_from_string(const std::string& s) {
  if (s == "I" || s == "i") return Shape::I;
  if (s == "J" || s == "j") return Shape::J;
  throw Error(ErrorCode::ParseError, "shape must be I or J, got '" + s + "'");
}

}  // namespace ssf

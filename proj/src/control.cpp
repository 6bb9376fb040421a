#include "ssf/control.hpp"

#include <algorithm>
#include <cmath>

#include "ssf/error.hpp"

namespace ssf {

Vec6 Wrench::stacked() const {
  Vec6 v;
  v << force, torque;
  return v;
}

void validate(const ControlConfig& cfg) {
  const auto& a = cfg.admittance;
  if (!std::isfinite(a.z) || !a.k_diag.allFinite() || (a.k_diag.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "admittance gains must be finite and non-negative");
  }
  if (!(a.deadzone_n >= 0.0) || !(a.deadzone_nmm >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dead zone thresholds must be non-negative");
  }
  if (!(cfg.dt_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(cfg.straight_speed_mm_s > 0.0) || !(cfg.curve_speed_mm_s > 0.0)) {
    throw Error(ErrorCode::NonPositiveSpeed, "speeds must be positive");
  }
  if (!(cfg.drill_rpm >= 0.0) || !(cfg.retract_rpm >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rpm must be non-negative");
  }
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Idle: return "Idle";
    case Stage::Admittance: return "Admittance";
    case Stage::AutonomousStraight: return "AutonomousStraight";
    case Stage::StationaryCurve: return "StationaryCurve";
    case Stage::Retracting: return "Retracting";
    case Stage::Done: return "Done";
  }
  return "Idle";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::Idle, Stage::Admittance, Stage::AutonomousStraight, Stage::StationaryCurve,
                   Stage::Retracting, Stage::Done}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::ParseError, "unknown stage '" + s + "'");
}

bool is_cutting(Stage stage) { return stage == Stage::AutonomousStraight || stage == Stage::StationaryCurve; }

// ---------------------------------------------------------------- admittance

namespace {
double shrink(double v, double threshold) {
  if (std::abs(v) <= threshold) return 0.0;
  return v > 0.0 ? v - threshold : v + threshold;
}
}  // namespace

Wrench apply_deadzone(const Wrench& w, const AdmittanceConfig& cfg) {
  Wrench out;
  for (int i = 0; i < 3; ++i) {
    out.force[i] = shrink(w.force[i], cfg.deadzone_n);
    out.torque[i] = shrink(w.torque[i], cfg.deadzone_nmm);
  }
  return out;
}

Twist admittance_step(const Wrench& w, const AdmittanceConfig& cfg) {
  const Vec6 v = cfg.z * cfg.k_diag.cwiseProduct(apply_deadzone(w, cfg).stacked());
  return {v.head<3>(), v.tail<3>()};
}

// ---------------------------------------------------------------- schedule

double Timeline::cutting_time_s() const {
  double t = 0.0;
  for (const auto& p : phases) {
    if (is_cutting(p.stage)) t += p.duration_s;
  }
  return t;
}

double Timeline::total_time_s() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.duration_s;
  return t;
}

Timeline procedure_schedule(const TrajectoryPlan& plan, double straight_speed, double curve_speed, double drill_rpm,
                            double retract_rpm) {
  validate(plan);
  if (!(straight_speed > 0.0) || !(curve_speed > 0.0)) {
    throw Error(ErrorCode::NonPositiveSpeed, "speeds must be positive");
  }
  const double straight_s = plan.straight_len_mm / straight_speed;
  const double curve_s = plan.arc_len_mm / curve_speed;
  Timeline tl;
  tl.phases = {
      {Stage::AutonomousStraight, straight_s, straight_speed, drill_rpm},
      {Stage::StationaryCurve, curve_s, curve_speed, drill_rpm},
      {Stage::Retracting, curve_s, curve_speed, retract_rpm},
      {Stage::Retracting, straight_s, straight_speed, retract_rpm},
  };
  return tl;
}

Timeline procedure_schedule(const TrajectoryPlan& plan, const ControlConfig& cfg) {
  return procedure_schedule(plan, cfg.straight_speed_mm_s, cfg.curve_speed_mm_s, cfg.drill_rpm, cfg.retract_rpm);
}

// ---------------------------------------------------------------- state machine

ProcedureState initial_state(const Pose& tool_pose) {
  ProcedureState s;
  s.tool_pose = tool_pose;
  s.insertion_start = tool_pose;
  return s;
}

namespace {

// Guide-tube tip offset from the tool pose, in the tool frame.
Vec3 guide_offset_local(const TrajectoryPlan& plan, double guide_mm) {
  if (plan.shape == Shape::I || plan.radius_mm <= 0.0) return {guide_mm, 0.0, 0.0};
  const double theta = guide_mm / plan.radius_mm;
  return Vec3(plan.radius_mm * std::sin(theta), 0.0, 0.0) +
         plan.radius_mm * (1.0 - std::cos(theta)) * curve_direction_local(plan.alpha_deg);
}

Vec3 guide_tangent_local(const TrajectoryPlan& plan, double guide_mm) {
  if (plan.shape == Shape::I || plan.radius_mm <= 0.0) return Vec3::UnitX();
  const double theta = guide_mm / plan.radius_mm;
  return Vec3(std::cos(theta), 0.0, 0.0) + std::sin(theta) * curve_direction_local(plan.alpha_deg);
}

// Advances `value` toward `target` at `speed`; returns the time used (<= dt).
double advance(double& value, double target, double speed, double dt) {
  const double remaining = std::abs(target - value);
  const double reach = speed * dt;
  if (remaining <= reach * (1.0 + 1e-12)) {
    value = target;
    return remaining / speed;
  }
  value += target > value ? reach : -reach;
  return dt;
}

void place_tool(ProcedureState& s) {
  s.tool_pose.position = s.insertion_start.position + s.straight_progress_mm * s.insertion_start.insertion_axis();
}

[[noreturn]] void mismatch(Stage stage, const char* what) {
  throw Error(ErrorCode::StageInputMismatch, std::string(what) + " not accepted in stage " + to_string(stage));
}

}  // namespace

Vec3 tip_position(const ProcedureState& s, const TrajectoryPlan& plan) {
  return s.tool_pose.to_world(guide_offset_local(plan, s.guide_insertion_mm));
}

Vec3 tip_direction(const ProcedureState& s, const TrajectoryPlan& plan) {
  return s.tool_pose.orientation * guide_tangent_local(plan, s.guide_insertion_mm);
}

double alignment_error_mm(const ProcedureState& s, const TrajectoryPlan& plan) {
  return (tip_position(s, plan) - plan.entry_pose.position).norm();
}

double alignment_error_deg(const ProcedureState& s, const TrajectoryPlan& plan) {
  return rad2deg(s.tool_pose.orientation.angularDistance(plan.entry_pose.orientation));
}

bool is_aligned(const ProcedureState& s, const TrajectoryPlan& plan, const ControlConfig& cfg) {
  return alignment_error_mm(s, plan) <= cfg.align_tol_mm && alignment_error_deg(s, plan) <= cfg.align_tol_deg;
}

ProcedureState step(const ProcedureState& state, const TrajectoryPlan& plan, const ControlConfig& cfg,
                    const StageInput& input, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  ProcedureState s = state;

  if (const auto* cmd = std::get_if<Command>(&input)) {
    if (*cmd == Command::Abort) {
      if (s.stage == Stage::Idle || s.stage == Stage::Done) {
        s.stage = Stage::Done;
        s.drill_rpm = 0.0;
      } else if (s.stage != Stage::Retracting) {
        s.stage = Stage::Retracting;
        s.drill_rpm = cfg.retract_rpm;
      }
      return s;
    }
    if (s.stage != Stage::Admittance) mismatch(s.stage, "start_autonomous");
    if (!is_aligned(s, plan, cfg)) {
      throw Error(ErrorCode::MisalignedEntry,
                  "tip " + std::to_string(alignment_error_mm(s, plan)) + " mm / " +
                      std::to_string(alignment_error_deg(s, plan)) + " deg from plan entry");
    }
    s.stage = Stage::AutonomousStraight;
    s.insertion_start = s.tool_pose;
    s.straight_progress_mm = 0.0;
    s.guide_insertion_mm = 0.0;
    s.drill_rpm = cfg.drill_rpm;
    return s;
  }

  const Wrench* wrench = std::get_if<Wrench>(&input);
  switch (s.stage) {
    case Stage::Idle:
      if (wrench) mismatch(s.stage, "wrench");
      s.stage = Stage::Admittance;
      return s;

    case Stage::Admittance: {
      s.elapsed_s += dt;
      if (!wrench) return s;  // no hand input: hold
      const Twist v = admittance_step(*wrench, cfg.admittance);
      s.tool_pose.position += v.linear * dt;
      const double w = v.angular.norm();
      if (w > 0.0) {
        s.tool_pose.orientation = (Quat(Eigen::AngleAxisd(w * dt, v.angular / w)) * s.tool_pose.orientation).normalized();
      }
      return s;
    }

    case Stage::AutonomousStraight: {
      if (wrench) mismatch(s.stage, "wrench");
      const double used = advance(s.straight_progress_mm, plan.straight_len_mm, cfg.straight_speed_mm_s, dt);
      place_tool(s);
      s.elapsed_s += used;
      s.cutting_time_s += used;
      if (s.straight_progress_mm >= plan.straight_len_mm) s.stage = Stage::StationaryCurve;
      return s;
    }

    case Stage::StationaryCurve: {
      if (wrench) mismatch(s.stage, "wrench");
      const double used = advance(s.guide_insertion_mm, plan.arc_len_mm, cfg.curve_speed_mm_s, dt);
      s.elapsed_s += used;
      s.cutting_time_s += used;
      if (s.guide_insertion_mm >= plan.arc_len_mm) {
        s.stage = Stage::Retracting;
        s.drill_rpm = cfg.retract_rpm;
      }
      return s;
    }

    case Stage::Retracting: {
      if (wrench) mismatch(s.stage, "wrench");
      double used = 0.0;
      if (s.guide_insertion_mm > 0.0) {
        used = advance(s.guide_insertion_mm, 0.0, cfg.curve_speed_mm_s, dt);
      } else if (s.straight_progress_mm > 0.0) {
        used = advance(s.straight_progress_mm, 0.0, cfg.straight_speed_mm_s, dt);
        place_tool(s);
      }
      s.elapsed_s += used;
      if (s.guide_insertion_mm <= 0.0 && s.straight_progress_mm <= 0.0) {
        s.stage = Stage::Done;
        s.drill_rpm = 0.0;
      }
      return s;
    }

    case Stage::Done:
      if (wrench) mismatch(s.stage, "wrench");
      return s;
  }
  return s;
}

}  // namespace ssf

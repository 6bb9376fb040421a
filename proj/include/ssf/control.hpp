#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ssf/geometry.hpp"
#include "ssf/trajectory.hpp"

namespace ssf {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Operator hand wrench: force in N, torque in N·mm.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Vec6 stacked() const;
};

/// Commanded end-effector velocity: mm/s and rad/s.
struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

struct AdmittanceConfig {
  double z = 15.0;  // (mm/s) / N
  Vec6 k_diag = (Vec6() << 1, 1, 1, 0, 0, 0).finished();
  double deadzone_n = 0.5;
  double deadzone_nmm = 50.0;
};

struct ControlConfig {
  AdmittanceConfig admittance;
  double dt_s = 0.01;
  double straight_speed_mm_s = 1.0;
  double curve_speed_mm_s = 2.0;
  double drill_rpm = 8250.0;
  double retract_rpm = 1000.0;
  // Start of autonomous drilling requires the tip within this distance of the
  // plan entry point and the tool axis within this angle of the plan axis.
  double align_tol_mm = 1.0;
  double align_tol_deg = 2.0;
};

void validate(const ControlConfig& cfg);

enum class Stage { Idle, Admittance, AutonomousStraight, StationaryCurve, Retracting, Done };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& s);

enum class Command { StartAutonomous, Abort };

using StageInput = std::variant<std::monostate, Wrench, Command>;

struct ProcedureState {
  Stage stage = Stage::Idle;
  Pose tool_pose;                   // tip of the rigid tool (guide exit)
  Pose insertion_start;             // tool pose when autonomous drilling began
  double straight_progress_mm = 0.0;
  double guide_insertion_mm = 0.0;  // in [0, arc_len]
  double drill_rpm = 0.0;
  double elapsed_s = 0.0;
  double cutting_time_s = 0.0;
};

struct Phase {
  Stage stage = Stage::Idle;
  double duration_s = 0.0;
  double speed_mm_s = 0.0;
  double rpm = 0.0;
};

struct Timeline {
  std::vector<Phase> phases;

  double cutting_time_s() const;
  double total_time_s() const;
};

Wrench apply_deadzone(const Wrench& w, const AdmittanceConfig& cfg);

/// v = z K deadzone(F)
Twist admittance_step(const Wrench& w, const AdmittanceConfig& cfg);

/// Planned phase durations. Retraction runs the insertion in reverse at the
/// insertion speeds and `retract_rpm`.
Timeline procedure_schedule(const TrajectoryPlan& plan, double straight_speed_mm_s, double curve_speed_mm_s,
                            double drill_rpm, double retract_rpm);
Timeline procedure_schedule(const TrajectoryPlan& plan, const ControlConfig& cfg);

ProcedureState initial_state(const Pose& tool_pose);

/// Advance the procedure by dt. Only the time actually needed to finish a
/// stage is counted, so cutting time matches the schedule exactly.
ProcedureState step(const ProcedureState& state, const TrajectoryPlan& plan, const ControlConfig& cfg,
                    const StageInput& input, double dt_s);

/// Drill tip position and pointing direction for a state.
Vec3 tip_position(const ProcedureState& state, const TrajectoryPlan& plan);
Vec3 tip_direction(const ProcedureState& state, const TrajectoryPlan& plan);

/// Distance from tip to the plan entry, and angle between tool and plan axes.
double alignment_error_mm(const ProcedureState& state, const TrajectoryPlan& plan);
double alignment_error_deg(const ProcedureState& state, const TrajectoryPlan& plan);
bool is_aligned(const ProcedureState& state, const TrajectoryPlan& plan, const ControlConfig& cfg);

bool is_cutting(Stage stage);

}  // namespace ssf

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssf/control.hpp"
#include "ssf/phantom.hpp"
#include "ssf/trajectory.hpp"

namespace ssf {

inline constexpr double kBallNoseDiameterMm = 6.0;
inline constexpr double kGuideDiameterMm = 3.61;

/// Supplies the operator input for the next step given the current state.
using Operator = std::function<StageInput(const ProcedureState&)>;

/// Starts autonomous drilling immediately (tool already on the entry pose).
Operator prealigned_operator();

/// Proportional hand guidance toward the plan entry; commands the autonomous
/// stage once the tip is within `settle_mm`. Forces are clipped per axis.
Operator steering_operator(const TrajectoryPlan& plan, double gain_n_per_mm = 0.5, double max_force_n = 5.0,
                           double settle_mm = 0.2);

struct TraceSample {
  double t_s = 0.0;
  Stage stage = Stage::Idle;
  Vec3 tip = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double guide_mm = 0.0;
};

struct SimOptions {
  double max_time_s = 600.0;
  // Channel alignment tolerance: distance from tip to channel axis at the
  // start of autonomous drilling. Defaults to the radial clearance between
  // the 8 mm channel and the 6 mm ball nose.
  double channel_tol_mm = -1.0;
};

struct SimLog {
  std::vector<TraceSample> trace;            // one per step, initial state first
  std::vector<std::uint32_t> removed_per_step;
  Timeline timeline;
  double cutting_time_s = 0.0;
  double total_time_s = 0.0;
  std::size_t removed_voxels = 0;
  double removed_volume_mm3 = 0.0;
  double tunnel_volume_mm3 = 0.0;  // voxels swept by the ball nose, any material
  std::size_t steps = 0;
  Stage final_stage = Stage::Idle;
};

/// Checks that the plan starts in the phantom channel and stays in the grid.
void check_plan_fits(const TrajectoryPlan& plan, const VoxelPhantom& phantom);

/// Drives the control state machine to completion from `start_pose`,
/// removing phantom voxels inside the ball nose at every cutting step.
SimLog simulate_procedure(const TrajectoryPlan& plan, VoxelPhantom& phantom, const ControlConfig& cfg,
                          const Operator& op, const Pose& start_pose, const SimOptions& opts = {});
SimLog simulate_procedure(const TrajectoryPlan& plan, VoxelPhantom& phantom, const ControlConfig& cfg,
                          const Operator& op);

/// Tip path over the cutting stages, as a polyline.
Polyline3 drilled_path(const SimLog& log);

}  // namespace ssf

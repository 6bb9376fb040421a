#include "ssf/drill_sim.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "ssf/error.hpp"

namespace ssf {

Operator prealigned_operator() {
  return [](const ProcedureState& s) -> StageInput {
    if (s.stage == Stage::Admittance) return Command::StartAutonomous;
    return std::monostate{};
  };
}

Operator steering_operator(const TrajectoryPlan& plan, double gain, double max_force, double settle_mm) {
  return [plan, gain, max_force, settle_mm](const ProcedureState& s) -> StageInput {
    if (s.stage != Stage::Admittance) return std::monostate{};
    const Vec3 err = plan.entry_pose.position - tip_position(s, plan);
    if (err.norm() <= settle_mm) return Command::StartAutonomous;
    Wrench w;
    w.force = (gain * err).cwiseMax(Vec3::Constant(-max_force)).cwiseMin(Vec3::Constant(max_force));
    // Push through the dead zone so the hand never stalls short of the target.
    for (int i = 0; i < 3; ++i) {
      if (w.force[i] != 0.0) w.force[i] += std::copysign(0.5, w.force[i]);
    }
    return w;
  };
}

void check_plan_fits(const TrajectoryPlan& plan, const VoxelPhantom& phantom) {
  validate(plan);
  const double clearance = (phantom.spec().channel_d_mm - kBallNoseDiameterMm) / 2.0;
  if (clearance < 0.0) throw Error(ErrorCode::PlanPhantomMismatch, "ball nose wider than the channel");
  const Vec3& entry = plan.entry_pose.position;
  if (phantom.channel_axis_distance(entry) > clearance + 1e-9 || std::abs(entry.x()) > 1.0) {
    throw Error(ErrorCode::PlanPhantomMismatch, "plan entry is not at the phantom channel mouth");
  }
  if (rad2deg(std::acos(std::clamp(plan.entry_pose.insertion_axis().x(), -1.0, 1.0))) > 2.0) {
    throw Error(ErrorCode::PlanPhantomMismatch, "plan insertion axis is not along the channel");
  }
  const double r = kBallNoseDiameterMm / 2.0;
  const Vec3 lo = phantom.origin() + Vec3::Constant(r);
  const Vec3 hi = phantom.origin() +
                  phantom.voxel_mm() * Vec3(phantom.dims()[0], phantom.dims()[1], phantom.dims()[2]) -
                  Vec3::Constant(r);
  const Polyline3 line = centerline(plan, 0.5);
  for (const auto& p : line.points) {
    if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) {
      throw Error(ErrorCode::PlanPhantomMismatch, "planned tunnel leaves the phantom grid");
    }
  }
}

SimLog simulate_procedure(const TrajectoryPlan& plan, VoxelPhantom& phantom, const ControlConfig& cfg,
                          const Operator& op) {
  return simulate_procedure(plan, phantom, cfg, op, plan.entry_pose);
}

SimLog simulate_procedure(const TrajectoryPlan& plan, VoxelPhantom& phantom, const ControlConfig& cfg,
                          const Operator& op, const Pose& start_pose, const SimOptions& opts) {
  validate(cfg);
  check_plan_fits(plan, phantom);
  const double clearance = opts.channel_tol_mm >= 0.0
                               ? opts.channel_tol_mm
                               : (phantom.spec().channel_d_mm - kBallNoseDiameterMm) / 2.0;
  const double ball_r = kBallNoseDiameterMm / 2.0;

  SimLog log;
  log.timeline = procedure_schedule(plan, cfg);
  std::vector<std::uint8_t> swept(phantom.voxel_count(), 0);

  ProcedureState state = initial_state(start_pose);
  auto record = [&](std::uint32_t removed) {
    log.trace.push_back({state.elapsed_s, state.stage, tip_position(state, plan), tip_direction(state, plan),
                         state.guide_insertion_mm});
    log.removed_per_step.push_back(removed);
  };
  record(0);

  const auto max_steps = static_cast<std::size_t>(std::ceil(opts.max_time_s / cfg.dt_s)) + 16;
  while (state.stage != Stage::Done) {
    if (log.steps >= max_steps) {
      throw Error(ErrorCode::InvalidArgument, "procedure did not finish within the time limit");
    }
    const StageInput input = op(state);
    if (std::holds_alternative<Command>(input) && std::get<Command>(input) == Command::StartAutonomous) {
      const Vec3 tip = tip_position(state, plan);
      if (phantom.channel_axis_distance(tip) > clearance + 1e-9) {
        throw Error(ErrorCode::MisalignedEntry, "tip is outside the channel tolerance");
      }
    }
    const Stage before = state.stage;
    state = step(state, plan, cfg, input, cfg.dt_s);
    ++log.steps;

    // Carve at every tip position reached while cutting, including the entry
    // point when drilling starts and the end point of the last cutting step.
    std::uint32_t removed = 0;
    if (is_cutting(before) || is_cutting(state.stage)) {
      removed = static_cast<std::uint32_t>(phantom.carve_sphere(tip_position(state, plan), ball_r, &swept));
    }
    record(removed);
  }

  log.cutting_time_s = state.cutting_time_s;
  log.total_time_s = state.elapsed_s;
  log.final_stage = state.stage;
  log.removed_voxels = phantom.removed_count();
  log.removed_volume_mm3 = phantom.removed_volume_mm3();
  log.tunnel_volume_mm3 =
      static_cast<double>(std::count(swept.begin(), swept.end(), std::uint8_t{1})) * phantom.voxel_volume_mm3();
  spdlog::debug("simulation finished: {} steps, cutting {:.3f} s, removed {} voxels", log.steps,
                log.cutting_time_s, log.removed_voxels);
  return log;
}

Polyline3 drilled_path(const SimLog& log) {
  std::vector<Vec3> pts;
  for (std::size_t i = 1; i < log.trace.size(); ++i) {
    if (is_cutting(log.trace[i].stage) || is_cutting(log.trace[i - 1].stage)) pts.push_back(log.trace[i].tip);
  }
  return Polyline3::from_points(std::move(pts));
}

}  // namespace ssf

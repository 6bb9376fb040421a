#pragma once

#include <span>
#include <string>
#include <vector>

#include "ssf/circle_fit.hpp"
#include "ssf/icp.hpp"
#include "ssf/tracker.hpp"
#include "ssf/trajectory.hpp"
#include "ssf/transition.hpp"

namespace ssf {

/// 100 * |ideal - fitted| / ideal. Throws InvalidArgument unless ideal > 0.
double radius_error(double fitted_mm, double ideal_mm);

struct EvalConfig {
  std::string trial_id;
  Direction direction = Direction::Insertion;
  TransitionOptions transition;
  RigidTransform icp_init = RigidTransform::identity();  // measured -> model guess
  int icp_max_iter = 100;
  double icp_tol = 1e-10;
};

struct TrialReport {
  std::string trial_id;
  Direction direction = Direction::Insertion;
  std::string trajectory_class;  // plan label, e.g. "J⁰₅₀"
  double ideal_radius_mm = 0.0;
  double icp_rmse_mm = 0.0;
  bool icp_converged = true;
  int icp_iterations = 0;
  double transition_s_mm = 0.0;
  double transition_offset_mm = 0.0;  // transition_s - planned straight length
  double fitted_radius_mm = 0.0;
  double radius_error_pct = 0.0;
  double fit_rmse_mm = 0.0;
  double tangent_agreement_deg = 0.0;  // mean angle between sensor direction and fitted path
  std::size_t n_points = 0;
};

/// Registers the measured phantom cloud (tracker frame) onto the model cloud,
/// maps the log into the model frame, then finds the transition and fits the
/// curved section. An empty `measured_cloud` skips registration.
/// Errors carry the stage name ("input", "icp", "transition", "circle_fit").
TrialReport evaluate_trial(const TrackerLog& log, const TrajectoryPlan& plan, std::span<const Vec3> model_cloud,
                           std::span<const Vec3> measured_cloud, const EvalConfig& cfg);

struct ClassSummary {
  std::string trajectory_class;
  double ideal_radius_mm = 0.0;
  std::size_t n = 0;
  double mean_radius_mm = 0.0;
  double std_radius_mm = 0.0;  // sample standard deviation, 0 for n = 1
  double min_radius_mm = 0.0;
  double max_radius_mm = 0.0;
  double error_pct = 0.0;       // radius_error(mean radius, ideal)
  double mean_error_pct = 0.0;  // mean of per-trial errors
  double mean_icp_rmse_mm = 0.0;
};

struct SummaryTable {
  std::vector<ClassSummary> classes;  // first appearance in trial-id order
  ClassSummary combined;
};

/// Throws EmptyInput for no reports.
SummaryTable aggregate(std::vector<TrialReport> reports);

/// Plain-text table: rows Radius of Curvature / Error / ICP RMSE,
/// columns Ideal / one per class / Combined.
std::string render_table(const SummaryTable& table);

}  // namespace ssf

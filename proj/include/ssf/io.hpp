#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "ssf/control.hpp"
#include "ssf/drill_sim.hpp"
#include "ssf/evaluation.hpp"
#include "ssf/phantom.hpp"
#include "ssf/screw.hpp"
#include "ssf/tracker.hpp"
#include "ssf/trajectory.hpp"

namespace ssf {

using Json = nlohmann::ordered_json;

// Readers throw ParseError on missing or mistyped fields and re-validate the
// result, so the usual domain errors (NonPositiveRadius, ...) surface as well.

Json to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

Json to_json(const TrajectoryPlan& plan);
TrajectoryPlan plan_from_json(const Json& j);
Json to_json(const BilateralPlan& plan);
BilateralPlan bilateral_from_json(const Json& j);
bool is_bilateral_json(const Json& j);

Json to_json(const ScrewParams& screw);
ScrewParams screw_from_json(const Json& j);
Json to_json(const FeasibilityReport& report);

Json to_json(const Timeline& timeline);
Json to_json(const ControlConfig& cfg);
ControlConfig control_config_from_json(const Json& j);

Json to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const Json& j);

/// Summary of a simulation run (timeline, cutting time, removed voxels).
Json to_json(const SimLog& log);

Json to_json(const TrialReport& report);
TrialReport trial_report_from_json(const Json& j);
Json to_json(const ClassSummary& summary);
Json to_json(const SummaryTable& table);

/// Header `t_s,x_mm,y_mm,z_mm,dx,dy,dz`, nine decimals.
std::string tracker_csv(const TrackerLog& log);
TrackerLog tracker_from_csv(const std::string& text);
/// Header `x_mm,y_mm,z_mm`.
std::string cloud_csv(const PointCloud& cloud);
PointCloud cloud_from_csv(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace ssf

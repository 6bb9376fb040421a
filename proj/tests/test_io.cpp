#include <filesystem>
#include <functional>

#include "doctest.h"
#include "ssf/error.hpp"
#include "ssf/io.hpp"

using namespace ssf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("plan round trip") {
  Pose entry;
  entry.position = Vec3(1.5, -2.25, 3);
  entry.orientation = Quat(Eigen::AngleAxisd(0.4, Vec3(0, 0.6, 0.8)));
  const auto plan = make_plan(Shape::J, 50, 90, 17, 35, entry);
  const Json j = to_json(plan);
  CHECK(j["shape"] == "J");
  CHECK(j["label"] == plan_label(plan));
  const TrajectoryPlan back = plan_from_json(j);
  CHECK(back.shape == Shape::J);
  CHECK(back.radius_mm == 50);
  CHECK(back.alpha_deg == 90);
  CHECK(back.straight_len_mm == 17);
  CHECK(back.arc_len_mm == 35);
  CHECK((back.entry_pose.position - entry.position).norm() < 1e-12);
  CHECK(back.entry_pose.orientation.angularDistance(entry.orientation) < 1e-12);
  // Text round trip too.
  CHECK(plan_from_json(Json::parse(j.dump())).radius_mm == 50);
}

TEST_CASE("plan readers reject bad input") {
  Json j = to_json(make_plan(Shape::J, 50, 0, 17, 35));
  j.erase("radius_mm");
  CHECK(code_of([&] { plan_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(make_plan(Shape::J, 50, 0, 17, 35));
  j["radius_mm"] = "fifty";
  CHECK(code_of([&] { plan_from_json(j); }) == ErrorCode::ParseError);
  j["radius_mm"] = -5.0;
  CHECK(code_of([&] { plan_from_json(j); }) == ErrorCode::NonPositiveRadius);
  j = to_json(make_plan(Shape::J, 50, 0, 17, 35));
  j["shape"] = "K";
  CHECK(code_of([&] { plan_from_json(j); }) == ErrorCode::ParseError);
}

TEST_CASE("bilateral plan round trip") {
  const auto b = make_bilateral(make_plan(Shape::J, 50, 0, 17, 35), make_plan(Shape::J, 50, 180, 17, 35));
  const Json j = to_json(b);
  CHECK(is_bilateral_json(j));
  CHECK_FALSE(is_bilateral_json(to_json(b.left)));
  const BilateralPlan back = bilateral_from_json(j);
  CHECK(back.label == b.label);
  CHECK(back.right.alpha_deg == 180);
}

TEST_CASE("config and phantom spec round trip") {
  ControlConfig cfg;
  cfg.admittance.deadzone_n = 0.0;
  cfg.straight_speed_mm_s = 1.5;
  const ControlConfig c2 = control_config_from_json(to_json(cfg));
  CHECK(c2.admittance.deadzone_n == 0.0);
  CHECK(c2.straight_speed_mm_s == 1.5);
  CHECK(c2.admittance.k_diag == cfg.admittance.k_diag);

  PhantomSpec spec;
  spec.voxel_mm = 0.4;
  const PhantomSpec s2 = phantom_spec_from_json(to_json(spec));
  CHECK(s2.voxel_mm == 0.4);
  CHECK(s2.body_extent_mm == spec.body_extent_mm);
  Json bad = to_json(spec);
  bad["voxel_mm"] = 2.0;
  CHECK(code_of([&] { phantom_spec_from_json(bad); }) == ErrorCode::VoxelTooCoarse);

  const ScrewParams sp = screw_from_json(to_json(default_fps()));
  CHECK(sp.flex_len_mm == default_fps().flex_len_mm);
}

TEST_CASE("trial report round trip") {
  TrialReport r;
  r.trial_id = "J0-003";
  r.direction = Direction::Retraction;
  r.trajectory_class = "J⁰₅₀";
  r.ideal_radius_mm = 50;
  r.fitted_radius_mm = 50.72;
  r.radius_error_pct = 1.44;
  r.n_points = 1041;
  const TrialReport b = trial_report_from_json(Json::parse(to_json(r).dump()));
  CHECK(b.trial_id == r.trial_id);
  CHECK(b.direction == Direction::Retraction);
  CHECK(b.trajectory_class == "J⁰₅₀");
  CHECK(b.fitted_radius_mm == 50.72);
  CHECK(b.n_points == 1041);
}

TEST_CASE("tracker csv") {
  TrackerLog log;
  log.samples.push_back({0.0, Vec3(1, 2, 3), Vec3(1, 0, 0)});
  log.samples.push_back({0.05, Vec3(1.123456789, -2, 3.5), Vec3(0, 0.6, 0.8)});
  const std::string text = tracker_csv(log);
  CHECK(text.rfind("t_s,x_mm,y_mm,z_mm,dx,dy,dz\n", 0) == 0);
  CHECK(text.find("1.123456789") != std::string::npos);
  const TrackerLog back = tracker_from_csv(text);
  REQUIRE(back.samples.size() == 2);
  CHECK((back.samples[1].position - log.samples[1].position).norm() < 1e-9);
  CHECK(back.samples[1].t_s == doctest::Approx(0.05));
  CHECK(code_of([] { tracker_from_csv("t_s,x_mm\n1,2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { tracker_from_csv("t_s,x_mm,y_mm,z_mm,dx,dy,dz\n0,1,2,x,1,0,0\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("cloud csv and files") {
  const PointCloud c{Vec3(1, 2, 3), Vec3(-4, 5.5, 0)};
  const std::string text = cloud_csv(c);
  CHECK(text.rfind("x_mm,y_mm,z_mm\n", 0) == 0);
  const PointCloud back = cloud_from_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1] == c[1]);

  const auto dir = std::filesystem::temp_directory_path() / "ssf_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_json_file(dir / "plan.json", to_json(make_plan(Shape::I, 0, 0, 40, 0)));
  CHECK(plan_from_json(read_json_file(dir / "plan.json")).shape == Shape::I);
  write_text_file(dir / "bad.json", "{ not json");
  CHECK(code_of([&] { read_json_file(dir / "bad.json"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { read_text_file(dir / "missing.json"); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir.parent_path());
}

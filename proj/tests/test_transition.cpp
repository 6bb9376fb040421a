#include <random>

#include "doctest.h"
#include "ssf/error.hpp"
#include "ssf/tracker.hpp"
#include "ssf/transition.hpp"

using namespace ssf;

namespace {

Polyline3 noisy_path(const TrajectoryPlan& plan, double sigma, std::uint64_t seed) {
  const TrackerLog log = synthesize_tracker_log(centerline(plan), 20.0, sigma, seed);
  return Polyline3::from_points(log.positions());
}

ErrorCode code_of(const Polyline3& p) {
  try {
    detect_transition(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("noiseless J path switches at the planned straight length") {
  for (double alpha : {0.0, 45.0, 90.0, 180.0, 270.0}) {
    const auto plan = make_plan(Shape::J, 50, alpha, 17, 35);
    const TransitionResult r = detect_transition(noisy_path(plan, 0.0, 1));
    CHECK(std::abs(r.transition_s_mm - 17.0) <= 0.2);
    CHECK(r.direction.dot(Vec3::UnitX()) > 0.9999);
    CHECK(r.split_index > 0);
  }
  const auto plan = make_plan(Shape::J, 30, 0, 25, 20);
  CHECK(detect_transition(centerline(plan, 0.1), 3.0, 0.3) == doctest::Approx(25.0).epsilon(0.01));
}

TEST_CASE("transition follows the pose of the plan") {
  Pose entry;
  entry.position = Vec3(5, -3, 12);
  entry.orientation = Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, -1).normalized()));
  const auto plan = make_plan(Shape::J, 50, 30, 17, 35, entry);
  const TransitionResult r = detect_transition(noisy_path(plan, 0.0, 1));
  CHECK(std::abs(r.transition_s_mm - 17.0) <= 0.2);
  CHECK((r.point - point_at(plan, 17.0)).norm() <= 0.2);
}

TEST_CASE("noisy J path stays near the planned transition") {
  const auto plan = make_plan(Shape::J, 50, 90, 17, 35);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const double s = detect_transition(noisy_path(plan, 0.2, seed)).transition_s_mm;
    CHECK(std::abs(s - 17.0) <= 1.0);
  }
}

TEST_CASE("straight and short paths") {
  CHECK(code_of(noisy_path(make_plan(Shape::I, 0, 0, 52, 0), 0.0, 1)) == ErrorCode::NoTransitionFound);
  CHECK(code_of(noisy_path(make_plan(Shape::I, 0, 0, 52, 0), 0.2, 7)) == ErrorCode::NoTransitionFound);
  CHECK(code_of(noisy_path(make_plan(Shape::J, 50, 0, 3, 2), 0.0, 1)) == ErrorCode::TooShort);
  CHECK_THROWS_AS(detect_transition(noisy_path(make_plan(Shape::J, 50, 0, 17, 35), 0, 1), -1.0, 0.3), Error);
}

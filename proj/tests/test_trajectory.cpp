#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ssf/error.hpp"
#include "ssf/trajectory.hpp"

using namespace ssf;

namespace {

// Endpoint by integrating the closed-form tangent field with Simpson's rule.
// Composite Simpson on each piece separately (the tangent has a kink at the junction).
Vec3 integrate_tangent(const TrajectoryPlan& plan, int n = 20000) {
  Vec3 acc = plan.entry_pose.position;
  const double bounds[] = {0.0, plan.straight_len_mm, plan.total_length_mm()};
  for (int piece = 0; piece < 2; ++piece) {
    const double a = bounds[piece], h = (bounds[piece + 1] - a) / n;
    Vec3 sum = Vec3::Zero();
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * tangent_at(plan, std::min(a + i * h, bounds[piece + 1]));
    }
    acc += sum * h / 3.0;
  }
  return acc;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Pose p;
  p.position = Vec3(g(rng), g(rng), g(rng)) * 10.0;
  p.orientation = Quat(g(rng), g(rng), g(rng), g(rng)).normalized();
  return p;
}

}  // namespace

TEST_CASE("make_plan examples") {
  const auto j = make_plan(Shape::J, 50, 0, 17, 35);
  CHECK(j.arc_angle_rad() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(j.total_length_mm() == doctest::Approx(52.0));

  const auto i = make_plan(Shape::I, 0, 0, 17, 35);
  CHECK(i.total_length_mm() == doctest::Approx(52.0));
  CHECK(i.arc_angle_rad() == 0.0);

  CHECK_THROWS_AS(make_plan(Shape::J, 50, 0, 17, 200), Error);
  try {
    make_plan(Shape::J, 50, 0, 17, 200);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArcTooLong);
  }
}

TEST_CASE("make_plan rejects invalid fields") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;  // sentinel: nothing thrown
  };
  CHECK(code_of([] { make_plan(Shape::J, -5, 0, 17, 35); }) == ErrorCode::NonPositiveRadius);
  CHECK(code_of([] { make_plan(Shape::J, 0, 0, 17, 35); }) == ErrorCode::NonPositiveRadius);
  CHECK(code_of([] { make_plan(Shape::J, 50, 0, -1, 35); }) == ErrorCode::NegativeLength);
  CHECK(code_of([] { make_plan(Shape::J, 50, 0, 17, -1); }) == ErrorCode::NegativeLength);
  CHECK(code_of([] { make_plan(Shape::J, 50, NAN, 17, 35); }) == ErrorCode::NonFinite);
  CHECK(code_of([] { make_plan(Shape::J, 10, 0, 17, 10 * kPi); }) == ErrorCode::ArcTooLong);
}

TEST_CASE("alpha is normalized to [0, 360)") {
  CHECK(make_plan(Shape::J, 50, -90, 17, 35).alpha_deg == doctest::Approx(270.0));
  CHECK(make_plan(Shape::J, 50, 360, 17, 35).alpha_deg == doctest::Approx(0.0));
  CHECK(make_plan(Shape::J, 50, 725, 17, 35).alpha_deg == doctest::Approx(5.0));
}

TEST_CASE("centerline endpoints") {
  const auto j0 = make_plan(Shape::J, 50, 0, 17, 35);
  const Vec3 e0 = centerline(j0).points.back();
  CHECK(e0.x() == doctest::Approx(49.211).epsilon(1e-4));
  CHECK(e0.y() == doctest::Approx(11.758).epsilon(1e-4));
  CHECK(std::abs(e0.z()) < 1e-9);

  const Vec3 e90 = centerline(make_plan(Shape::J, 50, 90, 17, 35)).points.back();
  CHECK(e90.x() == doctest::Approx(49.211).epsilon(1e-4));
  CHECK(std::abs(e90.y()) < 1e-9);
  CHECK(e90.z() == doctest::Approx(11.758).epsilon(1e-4));

  const Vec3 e180 = arc_endpoint(make_plan(Shape::J, 50, 180, 17, 35));
  CHECK(e180.y() == doctest::Approx(-11.758).epsilon(1e-4));

  const Vec3 ei = centerline(make_plan(Shape::I, 0, 0, 17, 35)).points.back();
  CHECK((ei - Vec3(52, 0, 0)).norm() < 1e-9);

  const Vec3 e_noarc = arc_endpoint(make_plan(Shape::J, 50, 0, 17, 0));
  CHECK((e_noarc - Vec3(17, 0, 0)).norm() < 1e-12);
}

TEST_CASE("closed-form endpoint agrees with integrated tangent field") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ur(20, 120), ua(0, 360), us(0, 30), ul(1, 40);
  for (int k = 0; k < 40; ++k) {
    const double r = ur(rng);
    const double arc = std::min(ul(rng), 0.95 * kPi * r);
    const auto p = make_plan(Shape::J, r, ua(rng), us(rng), arc, random_pose(rng));
    CHECK((arc_endpoint(p) - integrate_tangent(p)).norm() < 1e-8);
  }
}

TEST_CASE("centerline endpoint within step^2/(2r) of the closed form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(10, 200), ua(0, 360), us(0, 30), ul(0.5, 60), ustep(0.01, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double r = ur(rng);
    const double step = ustep(rng);
    const auto p = make_plan(Shape::J, r, ua(rng), us(rng), std::min(ul(rng), 0.99 * kPi * r), random_pose(rng));
    const auto line = centerline(p, step);
    CHECK((line.points.back() - arc_endpoint(p)).norm() <= step * step / (2 * r) + 1e-9);
    CHECK(line.length() == doctest::Approx(p.total_length_mm()).epsilon(1e-12));
    CHECK(std::abs(line.length() - p.total_length_mm()) < 1e-6);
  }
}

TEST_CASE("polyline spacing equals arc-length differences") {
  const auto line = centerline(make_plan(Shape::J, 50, 30, 17, 35), 0.1);
  REQUIRE(line.points.size() == line.cumulative_arclen.size());
  CHECK(line.cumulative_arclen.front() == 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double ds = line.cumulative_arclen[i] - line.cumulative_arclen[i - 1];
    CHECK(ds > 0.0);
    CHECK(std::abs((line.points[i] - line.points[i - 1]).norm() - ds) < 1e-9);
    CHECK(ds <= 0.1 + 1e-12);
  }
}

TEST_CASE("three-point curvature on the arc equals 1/r") {
  for (double r : {30.0, 50.0, 80.0}) {
    const auto p = make_plan(Shape::J, r, 45, 17, 35);
    const auto line = centerline(p, 0.1);
    int checked = 0;
    for (std::size_t i = 1; i + 1 < line.size(); ++i) {
      if (line.cumulative_arclen[i - 1] < p.straight_len_mm + 1e-9) continue;
      const double k = 1.0 / oracle::circumradius(line.points[i - 1], line.points[i], line.points[i + 1]);
      CHECK(std::abs(k - 1.0 / r) < 1e-6);
      ++checked;
    }
    CHECK(checked > 300);
  }
}

TEST_CASE("changing alpha rotates the centerline rigidly about the insertion axis") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(0, 360), ud(-180, 180);
  for (int k = 0; k < 20; ++k) {
    const Pose pose = random_pose(rng);
    const double a = ua(rng), d = ud(rng);
    const auto l1 = centerline(make_plan(Shape::J, 50, a, 17, 35, pose));
    const auto l2 = centerline(make_plan(Shape::J, 50, a + d, 17, 35, pose));
    REQUIRE(l1.size() == l2.size());
    // Positive alpha turns +y toward +z, i.e. a right-handed rotation about +x.
    const Eigen::AngleAxisd rot(deg2rad(d), pose.insertion_axis());
    for (std::size_t i = 0; i < l1.size(); ++i) {
      const Vec3 expected = pose.position + rot * (l1.points[i] - pose.position);
      CHECK((expected - l2.points[i]).norm() < 1e-9);
    }
  }
}

TEST_CASE("tangent continuity at the junction") {
  const auto p = make_plan(Shape::J, 50, 120, 17, 35);
  CHECK((tangent_at(p, 17.0 - 1e-9) - tangent_at(p, 17.0 + 1e-9)).norm() < 1e-9);
  CHECK((local_tangent(p, 17.0 + 1e-12) - Vec3::UnitX()).norm() < 1e-9);
}

TEST_CASE("I-shape centerline is straight") {
  const auto p = make_plan(Shape::I, 0, 0, 17, 35);
  for (const auto& q : centerline(p, 0.3).points) {
    CHECK(std::abs(q.y()) < 1e-12);
    CHECK(std::abs(q.z()) < 1e-12);
  }
}

TEST_CASE("centerline step bounds") {
  const auto p = make_plan(Shape::J, 50, 0, 17, 35);
  CHECK_THROWS_AS(centerline(p, 0.0), Error);
  CHECK_THROWS_AS(centerline(p, 1.5), Error);
  CHECK_NOTHROW(centerline(p, 1.0));
}

TEST_CASE("plan labels and bilateral pairs") {
  CHECK(plan_label(make_plan(Shape::J, 50, 0, 17, 35)) == "J⁰₅₀");
  CHECK(plan_label(make_plan(Shape::J, 50, 90, 17, 35)) == "J⁹⁰₅₀");
  CHECK(plan_label(make_plan(Shape::I, 0, 0, 52, 0)) == "I");
  CHECK(plan_label(make_plan(Shape::J, 50, 22.5, 17, 35)) == "J^{22.5}_{50}");

  const auto b = make_bilateral(make_plan(Shape::I, 0, 0, 52, 0), make_plan(Shape::J, 50, 0, 17, 35));
  CHECK(b.label == "I-J⁰₅₀");
  auto tampered = b;
  tampered.label = "J⁰₅₀-J⁰₅₀";
  CHECK_THROWS_AS(validate(tampered), Error);
  tampered.label = "IJ⁰₅₀";
  CHECK_NOTHROW(validate(tampered));
}

TEST_CASE("polyline interpolation") {
  const auto line = Polyline3::from_points({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(1, 2, 0)});
  CHECK(line.size() == 3);
  CHECK(line.length() == doctest::Approx(3.0));
  CHECK((line.point_at(2.0) - Vec3(1, 1, 0)).norm() < 1e-12);
  CHECK((line.point_at(-1.0) - Vec3(0, 0, 0)).norm() < 1e-12);
  CHECK((line.point_at(10.0) - Vec3(1, 2, 0)).norm() < 1e-12);
  CHECK((line.tangent_at(0.5) - Vec3(1, 0, 0)).norm() < 1e-12);
}

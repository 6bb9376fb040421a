#include <random>

#include "doctest.h"
#include "ssf/circle_fit.hpp"
#include "ssf/error.hpp"

using namespace ssf;

namespace {

std::vector<Vec3> arc_points(int n, double r, double span, const Vec3& center = Vec3::Zero(),
                             const Mat3& frame = Mat3::Identity()) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const double phi = span * i / (n - 1);
    pts.push_back(center + frame * Vec3(r * std::cos(phi), r * std::sin(phi), 0.0));
  }
  return pts;
}

// Linearized least-squares covariance of the radius for n points spread
// evenly over `span` with isotropic in-plane noise of `sigma` per axis.
double radius_std_oracle(int n, double span, double sigma) {
  Eigen::MatrixXd J(n, 3);
  for (int i = 0; i < n; ++i) {
    const double phi = span * i / (n - 1);
    J.row(i) << -std::cos(phi), -std::sin(phi), -1.0;
  }
  const Mat3 cov = (J.transpose() * J).inverse();
  return sigma * std::sqrt(cov(2, 2));
}

ErrorCode code_of(const std::vector<Vec3>& pts) {
  try {
    fit_circle_3d(pts);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("exact arc is recovered") {
  const auto pts = arc_points(70, 50.0, 0.7);
  const CircleFit c = fit_circle_3d(pts);
  CHECK(std::abs(c.radius_mm - 50.0) <= 1e-6);
  CHECK(c.center.norm() <= 1e-6);
  CHECK(std::abs(std::abs(c.normal.z()) - 1.0) <= 1e-9);
  CHECK(c.rmse_mm <= 1e-9);
  CHECK(c.arc_span_rad == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("fit is invariant under rigid motion") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  auto pts = arc_points(70, 50.0, 0.7);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (auto& p : pts) p += Vec3(noise(rng), noise(rng), noise(rng));
  const CircleFit base = fit_circle_3d(pts);
  for (int k = 0; k < 10; ++k) {
    const Quat q = Quat(g(rng), g(rng), g(rng), g(rng)).normalized();
    const Vec3 t(100 * g(rng), 100 * g(rng), 100 * g(rng));
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(q * p + t);
    const CircleFit c = fit_circle_3d(moved);
    CHECK(std::abs(c.radius_mm - base.radius_mm) <= 1e-9);
    CHECK(std::abs(c.rmse_mm - base.rmse_mm) <= 1e-9);
    CHECK((c.center - (q * base.center + t)).norm() <= 1e-7);
  }
}

TEST_CASE("noisy fits follow the linearized covariance oracle") {
  // Tracker noise of 0.2 mm RMS in 3D is 0.2/sqrt(3) per axis.
  const double sigma_axis = 0.2 / std::sqrt(3.0);
  const double sd = radius_std_oracle(70, 0.7, sigma_axis);
  CHECK(sd == doctest::Approx(0.726).epsilon(0.01));
  const auto clean = arc_points(70, 50.0, 0.7);
  std::mt19937_64 rng(123);
  std::normal_distribution<double> g(0.0, sigma_axis);
  const int trials = 400;
  double sum = 0.0, ss = 0.0;
  int inside = 0;
  for (int k = 0; k < trials; ++k) {
    std::vector<Vec3> pts = clean;
    for (auto& p : pts) p += Vec3(g(rng), g(rng), g(rng));
    const double r = fit_circle_3d(pts).radius_mm;
    sum += r;
    ss += r * r;
    inside += std::abs(r - 50.0) <= 1.96 * sd;
  }
  const double mean = sum / trials;
  const double emp_sd = std::sqrt((ss - trials * mean * mean) / (trials - 1));
  CHECK(std::abs(mean - 50.0) <= 3.0 * sd / std::sqrt(trials) + 0.05);
  CHECK(emp_sd == doctest::Approx(sd).epsilon(0.15));
  CHECK(inside >= static_cast<int>(0.92 * trials));
}

// Literal band: 95% of seeds inside [49, 51]. With
// 0.2 mm RMS noise the radius spread is ~0.73 mm, so only ~83% land inside
// (see the covariance oracle above). Kept to document the gap.
TEST_CASE("literal 95% in [49, 51] band for 70 noisy points" * doctest::may_fail()) {
  const auto clean = arc_points(70, 50.0, 0.7);
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 0.2 / std::sqrt(3.0));
  int inside = 0;
  for (int k = 0; k < 200; ++k) {
    std::vector<Vec3> pts = clean;
    for (auto& p : pts) p += Vec3(g(rng), g(rng), g(rng));
    const double r = fit_circle_3d(pts).radius_mm;
    inside += r >= 49.0 && r <= 51.0;
  }
  MESSAGE("fraction inside [49, 51]: " << inside / 200.0);
  CHECK(inside >= 190);
}

TEST_CASE("circle fit errors") {
  std::vector<Vec3> line;
  for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, -i);
  CHECK(code_of(line) == ErrorCode::CollinearPoints);
  CHECK(code_of(arc_points(4, 50.0, 0.7)) == ErrorCode::InsufficientArc);
  CHECK(code_of(arc_points(30, 50.0, deg2rad(5.0))) == ErrorCode::InsufficientArc);
  CHECK(code_of(arc_points(30, 50.0, deg2rad(12.0))) == ErrorCode::IoError);  // fits
}

TEST_CASE("distance to the fitted circle") {
  const CircleFit c = fit_circle_3d(arc_points(40, 10.0, 1.0));
  CHECK(circle_distance(c, Vec3(13, 0, 0)) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(circle_distance(c, Vec3(10, 0, 4)) == doctest::Approx(4.0).epsilon(1e-9));
}

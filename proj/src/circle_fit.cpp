#include "ssf/circle_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ssf/error.hpp"

namespace ssf {

namespace {

struct Planar {
  Eigen::Vector2d c;
  double r;
};

double geometric_cost(const std::vector<Eigen::Vector2d>& q, const Planar& p) {
  double sum = 0.0;
  for (const auto& v : q) {
    const double e = (v - p.c).norm() - p.r;
    sum += e * e;
  }
  return sum;
}

// Gauss-Newton normal equations at p.
void normal_equations(const std::vector<Eigen::Vector2d>& q, const Planar& p, Eigen::Matrix3d& jtj,
                      Eigen::Vector3d& jte) {
  jtj.setZero();
  jte.setZero();
  for (const auto& v : q) {
    const Eigen::Vector2d d = v - p.c;
    const double dist = d.norm();
    if (dist <= 0.0) continue;
    const Eigen::Vector3d j(-d.x() / dist, -d.y() / dist, -1.0);
    jtj += j * j.transpose();
    jte += j * (dist - p.r);
  }
}

// Undamped steps while they keep shrinking. Cost comparisons stall at
// sqrt(machine epsilon) along the flat radius direction of a short arc.
Planar polish(const std::vector<Eigen::Vector2d>& q, Planar p) {
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 10; ++it) {
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jte;
    normal_equations(q, p, jtj, jte);
    const Eigen::Vector3d delta = jtj.ldlt().solve(-jte);
    if (!delta.allFinite() || delta.norm() >= last) break;
    p = {p.c + delta.head<2>(), p.r + delta.z()};
    last = delta.norm();
    if (last <= 1e-15 * std::max(1.0, p.r)) break;
  }
  return p;
}

Planar refine(const std::vector<Eigen::Vector2d>& q, Planar p) {
  double lambda = 1e-3;
  double cost = geometric_cost(q, p);
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix3d jtj;
    Eigen::Vector3d jte;
    normal_equations(q, p, jtj, jte);
    bool improved = false;
    for (int tries = 0; tries < 20 && !improved; ++tries) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() *= 1.0 + lambda;
      const Eigen::Vector3d delta = a.ldlt().solve(-jte);
      const Planar trial{p.c + delta.head<2>(), p.r + delta.z()};
      const double trial_cost = geometric_cost(q, trial);
      if (trial_cost <= cost) {
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (delta.norm() < 1e-12 * std::max(1.0, p.r)) return p;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) return p;
  }
  return p;
}

// Angular coverage: 2 pi minus the largest gap between sorted angles.
double arc_span(const std::vector<Eigen::Vector2d>& q, const Eigen::Vector2d& c) {
  std::vector<double> ang;
  ang.reserve(q.size());
  for (const auto& v : q) ang.push_back(std::atan2(v.y() - c.y(), v.x() - c.x()));
  std::sort(ang.begin(), ang.end());
  double gap = ang.front() + 2.0 * kPi - ang.back();
  for (std::size_t i = 1; i < ang.size(); ++i) gap = std::max(gap, ang[i] - ang[i - 1]);
  return 2.0 * kPi - gap;
}

}  // namespace

CircleFit fit_circle_3d(std::span<const Vec3> points) {
  if (points.size() < 5) throw Error(ErrorCode::InsufficientArc, "circle fit needs at least 5 points");

  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) cov += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-14 * ev(2)) {
    throw Error(ErrorCode::CollinearPoints, "points are collinear");
  }
  const Vec3 e1 = eig.eigenvectors().col(2);
  const Vec3 e2 = eig.eigenvectors().col(1);
  const Vec3 normal = eig.eigenvectors().col(0);

  // Centered, scaled planar coordinates keep the algebraic system well conditioned.
  const double scale = std::sqrt(ev(2) / static_cast<double>(points.size()));
  std::vector<Eigen::Vector2d> q;
  q.reserve(points.size());
  for (const auto& p : points) {
    const Vec3 d = p - centroid;
    q.emplace_back(d.dot(e1) / scale, d.dot(e2) / scale);
  }

  // Kasa: x^2 + y^2 + D x + E y + F = 0.
  Eigen::MatrixXd a(q.size(), 3);
  Eigen::VectorXd b(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) << q[i].x(), q[i].y(), 1.0;
    b(static_cast<Eigen::Index>(i)) = -q[i].squaredNorm();
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  Planar init{Eigen::Vector2d(-sol(0) / 2.0, -sol(1) / 2.0), 0.0};
  const double r2 = init.c.squaredNorm() - sol(2);
  if (!std::isfinite(r2) || r2 <= 0.0 || !init.c.allFinite()) {
    throw Error(ErrorCode::CollinearPoints, "no finite circle through the points");
  }
  init.r = std::sqrt(r2);
  const Planar fit = polish(q, refine(q, init));
  if (!std::isfinite(fit.r) || fit.r <= 0.0) throw Error(ErrorCode::CollinearPoints, "circle fit diverged");

  CircleFit out;
  out.radius_mm = fit.r * scale;
  out.center = centroid + scale * (fit.c.x() * e1 + fit.c.y() * e2);
  out.normal = normal;
  out.arc_span_rad = arc_span(q, fit.c);
  if (out.arc_span_rad < kMinArcSpanRad) {
    throw Error(ErrorCode::InsufficientArc, "points span less than 10 degrees of arc");
  }
  double sum = 0.0;
  for (const auto& p : points) {
    const double d = circle_distance(out, p);
    sum += d * d;
  }
  out.rmse_mm = std::sqrt(sum / static_cast<double>(points.size()));
  return out;
}

double circle_distance(const CircleFit& c, const Vec3& p) {
  const Vec3 d = p - c.center;
  const double h = d.dot(c.normal);
  const double rho = (d - h * c.normal).norm();
  return std::hypot(h, rho - c.radius_mm);
}

}  // namespace ssf

#include "ssf/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ssf/circle_fit.hpp"
#include "ssf/error.hpp"

namespace ssf {

namespace {

struct Line {
  Vec3 centroid;
  Vec3 dir;
};

// Total-least-squares line; direction oriented from the first toward the last point.
Line fit_line(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 u = eig.eigenvectors().col(2);
  if ((pts.back() - pts.front()).dot(u) < 0.0) u = -u;
  return {c, u};
}

double perp_distance(const Line& l, const Vec3& p) {
  const Vec3 d = p - l.centroid;
  return (d - d.dot(l.dir) * l.dir).norm();
}

// Prefix sums so the TLS residual of any leading run costs O(1).
struct PrefixMoments {
  std::vector<Vec3> s1;
  std::vector<Mat3> s2;
  explicit PrefixMoments(const std::vector<Vec3>& p) : s1(p.size() + 1, Vec3::Zero()), s2(p.size() + 1, Mat3::Zero()) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      s1[i + 1] = s1[i] + p[i];
      s2[i + 1] = s2[i] + p[i] * p[i].transpose();
    }
  }
  double line_residual(std::size_t k) const {
    const double n = static_cast<double>(k);
    const Vec3 m = s1[k] / n;
    const Mat3 cov = s2[k] - n * m * m.transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov, Eigen::EigenvaluesOnly);
    return std::max(0.0, cov.trace() - eig.eigenvalues()(2));
  }
};

}  // namespace

TransitionResult detect_transition(const Polyline3& poly, const TransitionOptions& opts) {
  if (!(opts.window_mm > 0.0) || !(opts.dev_tol_mm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "window and deviation tolerance must be positive");
  }
  const auto& p = poly.points;
  const std::size_t n = p.size();
  if (n < 2 || poly.length() <= 2.0 * opts.window_mm) {
    throw Error(ErrorCode::TooShort, "path is not longer than two detection windows");
  }
  const double w = opts.window_mm;

  // Coarse stage: grow the leading line until the next window departs from it.
  std::size_t i = 0;
  while (i < n && (p[i] - p[0]).norm() <= w) ++i;
  std::size_t cand = 0;
  bool found = false;
  for (; i + 1 < n; ++i) {
    const Line l = fit_line(std::span<const Vec3>(p.data(), i));
    const double ti = (p[i] - p[0]).dot(l.dir);
    const double tend = (p[n - 1] - p[0]).dot(l.dir);
    if (tend - ti < w) break;
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = i; j < n; ++j) {
      if ((p[j] - p[0]).dot(l.dir) - ti > w) break;
      sum += perp_distance(l, p[j]);
      ++cnt;
    }
    if (cnt > 0 && sum / static_cast<double>(cnt) > opts.dev_tol_mm) {
      cand = i;
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorCode::NoTransitionFound, "path never departs its leading line");

  // Two-segment refinement: TLS line on the prefix, fixed circle on the remainder.
  CircleFit arc;
  try {
    arc = fit_circle_3d(std::span<const Vec3>(p.data() + cand, n - cand));
  } catch (const Error& e) {
    throw Error(ErrorCode::NoTransitionFound, std::string("curved section not resolvable: ") + e.what());
  }
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    const double d = circle_distance(arc, p[j]);
    tail[j] = tail[j + 1] + d * d;
  }
  const PrefixMoments pm(p);
  std::size_t hi = cand;
  while (hi < n && poly.cumulative_arclen[hi] - poly.cumulative_arclen[cand] < w) ++hi;
  std::size_t k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = std::min<std::size_t>(5, n); s < hi; ++s) {
    const double tot = pm.line_residual(s) + tail[s];
    if (tot < best) {
      best = tot;
      k = s;
    }
  }
  if (k == 0) throw Error(ErrorCode::NoTransitionFound, "no admissible split point");

  // Tangency: junction is the foot of the perpendicular from the arc center to the line.
  TransitionResult out;
  out.coarse_index = cand;
  Line line = fit_line(std::span<const Vec3>(p.data(), k));
  Vec3 junction = p[k];
  for (int round = 0; round < opts.tangency_rounds; ++round) {
    const double tk = (p[k] - p[0]).dot(line.dir);
    std::vector<Vec3> before, after;
    for (const auto& q : p) {
      const double t = (q - p[0]).dot(line.dir);
      if (t <= tk - opts.tangency_margin_mm) before.push_back(q);
      if (t >= tk + opts.tangency_margin_mm) after.push_back(q);
    }
    if (before.size() < 2) break;
    Line l;
    CircleFit c;
    try {
      l = fit_line(before);
      c = fit_circle_3d(after);
    } catch (const Error&) {
      break;
    }
    line = l;
    arc = c;
    junction = l.centroid + (c.center - l.centroid).dot(l.dir) * l.dir;
    const double tj = (junction - p[0]).dot(l.dir);
    std::size_t nk = 0;
    while (nk < n && (p[nk] - p[0]).dot(l.dir) < tj) ++nk;
    if (nk == k) break;
    k = std::clamp<std::size_t>(nk, 1, n - 1);
  }
  if (opts.tangency_rounds <= 0) {
    junction = line.centroid + (arc.center - line.centroid).dot(line.dir) * line.dir;
  }
  out.direction = line.dir;
  out.point = junction;
  out.transition_s_mm = (junction - p[0]).dot(line.dir);
  out.split_index = k;
  return out;
}

}  // namespace ssf

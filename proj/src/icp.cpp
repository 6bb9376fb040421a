#include "ssf/icp.hpp"

#include <cmath>

#include "ssf/error.hpp"
#include "ssf/kdtree.hpp"

namespace ssf {

RigidTransform best_fit_transform(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.size() != to.size() || from.empty()) {
    throw Error(ErrorCode::InvalidArgument, "best_fit_transform needs equally sized non-empty sets");
  }
  const double n = static_cast<double>(from.size());
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= n;
  cb /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) h += (from[i] - ca) * (to[i] - cb).transpose();

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = cb - t.rotation * ca;
  return t;
}

void require_non_degenerate(std::span<const Vec3> pts, const char* name) {
  if (pts.size() < 3) throw Error(ErrorCode::DegenerateGeometry, std::string(name) + " needs at least 3 points");
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(ErrorCode::DegenerateGeometry, std::string(name) + " points are collinear or coincident");
  }
}

namespace {

struct Matching {
  std::vector<Vec3> matched;
  double rmse = 0.0;
};

Matching match(std::span<const Vec3> source, const KdTree& tree, const RigidTransform& t) {
  Matching m;
  m.matched.reserve(source.size());
  double sum = 0.0;
  for (const auto& p : source) {
    const auto hit = tree.nearest(t.apply(p));
    m.matched.push_back(tree.point(hit.index));
    sum += hit.dist_sq;
  }
  m.rmse = std::sqrt(sum / static_cast<double>(source.size()));
  return m;
}

}  // namespace

IcpResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& init,
                       int max_iter, double tol) {
  require_non_degenerate(source, "source");
  require_non_degenerate(target, "target");
  if (max_iter < 0 || !(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bad ICP iteration settings");

  const KdTree tree(target);
  IcpResult out;
  out.transform = init;
  Matching current = match(source, tree, init);
  out.rmse_history.push_back(current.rmse);

  for (int it = 0; it < max_iter; ++it) {
    const RigidTransform next = best_fit_transform(source, current.matched);
    Matching candidate = match(source, tree, next);
    ++out.iterations;
    if (candidate.rmse > current.rmse) {
      out.converged = true;  // numerical floor reached
      break;
    }
    const double gain = current.rmse - candidate.rmse;
    out.transform = next;
    current = std::move(candidate);
    out.rmse_history.push_back(current.rmse);
    if (gain < tol) {
      out.converged = true;
      break;
    }
  }
  out.rmse_mm = current.rmse;
  return out;
}

}  // namespace ssf

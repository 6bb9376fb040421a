#pragma once

#include <span>
#include <vector>

#include "ssf/geometry.hpp"

namespace ssf {

struct IcpResult {
  RigidTransform transform;  // maps source into the target frame
  double rmse_mm = 0.0;
  int iterations = 0;
  bool converged = false;  // false: stopped at max_iter
  std::vector<double> rmse_history;  // one entry per accepted transform, non-increasing
};

/// Least-squares rigid motion taking `from[i]` onto `to[i]` (SVD / Kabsch).
RigidTransform best_fit_transform(std::span<const Vec3> from, std::span<const Vec3> to);

/// Throws DegenerateGeometry for fewer than 3 points or collinear/coincident sets.
void require_non_degenerate(std::span<const Vec3> pts, const char* name);

/// Point-to-point ICP. Each iteration pairs every source point with its
/// nearest target point under the current transform and re-solves the rigid
/// alignment. Stops when the RMSE improves by less than `tol` or after
/// `max_iter` iterations. A step that would raise the RMSE is rejected.
IcpResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& init,
                       int max_iter = 100, double tol = 1e-10);

}  // namespace ssf

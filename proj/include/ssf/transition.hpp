#pragma once

#include <cstddef>

#include "ssf/geometry.hpp"
#include "ssf/trajectory.hpp"

namespace ssf {

struct TransitionOptions {
  double window_mm = 3.0;
  double dev_tol_mm = 0.3;
  double tangency_margin_mm = 1.0;  // points this close to the split are left out of the refit
  int tangency_rounds = 4;
};

struct TransitionResult {
  double transition_s_mm = 0.0;   // distance from the first point, measured along the fitted line
  Vec3 point = Vec3::Zero();      // junction on the fitted line
  Vec3 direction = Vec3::UnitX(); // unit direction of the straight segment
  std::size_t split_index = 0;    // first index past the junction
  std::size_t coarse_index = 0;   // where the deviation trigger fired
};

/// Finds where a path leaves its leading straight segment.
/// Throws TooShort when the path is not longer than two windows and
/// NoTransitionFound when no persistent departure exists.
TransitionResult detect_transition(const Polyline3& poly, const TransitionOptions& opts = {});

inline double detect_transition(const Polyline3& poly, double window_mm, double dev_tol_mm) {
  TransitionOptions o;
  o.window_mm = window_mm;
  o.dev_tol_mm = dev_tol_mm;
  return detect_transition(poly, o).transition_s_mm;
}

}  // namespace ssf

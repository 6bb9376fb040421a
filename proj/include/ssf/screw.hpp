#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ssf/trajectory.hpp"

namespace ssf {

/// Flexible pedicle screw geometry (all lengths in mm).
struct ScrewParams {
  double outer_d_mm = 7.0;
  double root_d_mm = 4.0;        // rigid-region thread root
  double flex_root_d_mm = 3.0;   // flexible-region thread root
  double thread_h_mm = 2.0;      // flexible region
  double thread_h_rigid_mm = 1.5;
  double pitch_mm = 3.0;
  double rigid_len_mm = 18.0;
  double flex_len_mm = 30.3;
  double cannula_d_mm = 0.9;
  double min_bend_radius_mm = 50.0;
  int thread_count = 5;

  double total_len_mm() const { return rigid_len_mm + flex_len_mm; }
};

struct FeasibilityReport {
  bool feasible = false;
  double rigid_chord_max_mm = 0.0;
  double rigid_margin_mm = 0.0;
  bool bend_radius_ok = false;
  bool straight_fit_ok = false;
  std::vector<std::string> notes;
};

struct ChordLimit {
  double length_mm = 0.0;
  double effective_d_mm = 0.0;
  bool clamped = false;
};

ScrewParams default_fps();

/// Throws InvalidSpec when diameters are out of order or non-positive.
void validate(const ScrewParams& screw);

/// Longest straight cylinder of diameter d that fits in a toroidal tunnel of
/// centerline radius R and bore D: the longest chord of the outer allowed
/// circle (R + D/2 - d/2) that clears the inner one (R - D/2 + d/2).
/// A segment wider than the bore is clamped to d = D (it must tap its way in).
ChordLimit rigid_chord_limit_detail(double tunnel_radius_mm, double tunnel_bore_mm, double segment_d_mm);
double rigid_chord_limit(double tunnel_radius_mm, double tunnel_bore_mm, double segment_d_mm);

FeasibilityReport check_feasibility(const ScrewParams& screw, const TrajectoryPlan& plan, double tunnel_bore_mm);

/// ASCII STL of a simplified screw along +z: root cylinders for the rigid and
/// flexible regions plus a helical thread ribbon. Returns the facet count.
std::size_t write_screw_stl(const ScrewParams& screw, std::ostream& out, double tolerance_mm = 0.05);

}  // namespace ssf

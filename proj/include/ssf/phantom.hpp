#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ssf/geometry.hpp"

namespace ssf {

/// Parametric L3 phantom in its own frame: the channel entry is at the origin
/// and the channel runs along +x through the pedicle into the vertebral body.
///
///   pedicle  x in [0, L_p], square section of half-width channel_d/2 + shell
///   body     x in [L_p - shell, L_p + extent.x], |y| <= extent.y/2, |z| <= extent.z/2;
///            an outer shell layer around a sawbone insert starting at x = L_p
///   channel  Void cylinder of diameter channel_d along +x for x <= L_p
struct PhantomSpec {
  double voxel_mm = 0.2;
  Vec3 body_extent_mm = Vec3(40.0, 44.0, 40.0);
  double shell_thickness_mm = 2.0;
  double channel_d_mm = 8.0;
  double insert_pcf = 10.0;
  double pedicle_len_mm = 17.0;
  double body_depth_mm = 33.4;  // usable depth past the pedicle, reported only
  double margin_mm = 4.0;       // empty grid border around the phantom
};

void validate(const PhantomSpec& spec);

enum class Tissue : std::uint8_t { Void = 0, Shell = 1, Insert = 2 };

struct VoxelIndex {
  int i = 0, j = 0, k = 0;
};

class VoxelPhantom {
 public:
  explicit VoxelPhantom(const PhantomSpec& spec);

  const PhantomSpec& spec() const { return spec_; }
  const Vec3& origin() const { return origin_; }
  double voxel_mm() const { return spec_.voxel_mm; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t voxel_count() const { return tissue_.size(); }
  double voxel_volume_mm3() const { return spec_.voxel_mm * spec_.voxel_mm * spec_.voxel_mm; }

  bool in_bounds(const VoxelIndex& v) const;
  std::size_t linear(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v.k) * dims_[1] + v.j) * dims_[0] + v.i;
  }
  Vec3 center(const VoxelIndex& v) const;
  VoxelIndex locate(const Vec3& p) const;

  Tissue tissue(const VoxelIndex& v) const { return static_cast<Tissue>(tissue_[linear(v)]); }
  /// Sawbone grade of insert voxels; 0 for shell and void.
  double density_pcf(const VoxelIndex& v) const;
  bool removed(const VoxelIndex& v) const { return removed_[linear(v)] != 0; }
  std::size_t removed_count() const { return removed_count_; }
  double removed_volume_mm3() const { return static_cast<double>(removed_count_) * voxel_volume_mm3(); }

  /// Removes material voxels whose centers lie within the sphere; returns the
  /// number newly removed. If `swept` is given (size voxel_count()), every
  /// voxel inside the sphere is flagged there regardless of material.
  std::size_t carve_sphere(const Vec3& c, double radius, std::vector<std::uint8_t>* swept = nullptr);

  void clear_removed();

  /// Distance from a point to the channel axis (the phantom +x axis).
  double channel_axis_distance(const Vec3& p) const;

  /// Points sampled on the phantom's outer and channel surfaces.
  PointCloud surface_cloud(double spacing_mm) const;

  /// Classification of an arbitrary point from the analytic geometry.
  Tissue classify(const Vec3& p) const;

 private:
  PhantomSpec spec_;
  Vec3 origin_;
  std::array<int, 3> dims_{};
  std::vector<std::uint8_t> tissue_;
  std::vector<std::uint8_t> removed_;
  std::size_t removed_count_ = 0;
};

VoxelPhantom build_phantom(const PhantomSpec& spec);

}  // namespace ssf

#pragma once

#include <cstdint>
#include <vector>

#include "ssf/trajectory.hpp"

namespace ssf {

enum class Direction { Insertion, Retraction };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// One 5-DoF sensor sample: tip position and pointing direction (no roll).
struct TrackerSample {
  double t_s = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
};

struct TrackerLog {
  std::vector<TrackerSample> samples;

  std::vector<Vec3> positions() const;
  TrackerLog reversed() const;
};

struct TrackerOptions {
  double sample_hz = 20.0;
  /// RMS magnitude of the 3D position error (each axis gets sigma / sqrt(3)).
  double noise_sigma_mm = 0.2;
  std::uint64_t seed = 42;
  double insertion_speed_mm_s = 2.0;
  Direction direction = Direction::Insertion;
  /// Lever arm that turns position noise into pointing noise.
  double sensor_len_mm = 6.0;
};

/// Screw-tip samples taken along `centerline` at constant insertion speed.
/// Retraction runs the schedule from the far end back to the entry while the
/// sensor keeps pointing forward along the tunnel.
TrackerLog synthesize_tracker_log(const Polyline3& centerline, const TrackerOptions& opts);
TrackerLog synthesize_tracker_log(const Polyline3& centerline, double sample_hz, double noise_sigma_mm,
                                  std::uint64_t seed);

}  // namespace ssf

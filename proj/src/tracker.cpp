#include "ssf/tracker.hpp"

#include <cmath>
#include <random>

#include "ssf/error.hpp"

namespace ssf {

std::string to_string(Direction d) { return d == Direction::Insertion ? "insertion" : "retraction"; }

Direction direction_from_string(const std::string& s) {
  if (s == "insertion" || s == "Insertion") return Direction::Insertion;
  if (s == "retraction" || s == "Retraction") return Direction::Retraction;
  throw Error(ErrorCode::ParseError, "direction must be insertion or retraction, got '" + s + "'");
}

std::vector<Vec3> TrackerLog::positions() const {
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.position);
  return out;
}

TrackerLog TrackerLog::reversed() const {
  TrackerLog out;
  out.samples.assign(samples.rbegin(), samples.rend());
  return out;
}

TrackerLog synthesize_tracker_log(const Polyline3& line, const TrackerOptions& opts) {
  if (line.size() < 2) throw Error(ErrorCode::EmptyCenterline, "centerline needs at least two points");
  if (!(opts.sample_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_hz must be positive");
  if (!(opts.noise_sigma_mm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
  if (!(opts.insertion_speed_mm_s > 0.0)) throw Error(ErrorCode::NonPositiveSpeed, "insertion speed must be positive");

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double axis_sigma = opts.noise_sigma_mm / std::sqrt(3.0);
  const double angle_sigma = axis_sigma / opts.sensor_len_mm;

  const double length = line.length();
  TrackerLog log;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) / opts.sample_hz;
    const double travel = opts.insertion_speed_mm_s * t;
    if (travel > length + 1e-9) break;
    const double s = opts.direction == Direction::Insertion ? travel : length - travel;
    TrackerSample sample;
    sample.t_s = t;
    sample.position = line.point_at(s);
    sample.direction = line.tangent_at(s);
    if (opts.noise_sigma_mm > 0.0) {
      const Vec3 dp(unit(rng), unit(rng), unit(rng));
      const Vec3 dd(unit(rng), unit(rng), unit(rng));
      sample.position += axis_sigma * dp;
      sample.direction = (sample.direction + angle_sigma * dd).normalized();
    }
    log.samples.push_back(sample);
  }
  return log;
}

TrackerLog synthesize_tracker_log(const Polyline3& line, double sample_hz, double noise_sigma_mm, std::uint64_t seed) {
  TrackerOptions opts;
  opts.sample_hz = sample_hz;
  opts.noise_sigma_mm = noise_sigma_mm;
  opts.seed = seed;
  return synthesize_tracker_log(line, opts);
}

}  // namespace ssf

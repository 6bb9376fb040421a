#include "ssf/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ssf/error.hpp"

namespace ssf {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ParseError, fmt::format("missing field '{}'", key));
  return *it;
}

double num(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) throw Error(ErrorCode::ParseError, fmt::format("field '{}' must be a number", key));
  return v.get<double>();
}

double num_or(const Json& j, const char* key, double fallback) {
  return j.is_object() && j.contains(key) ? num(j, key) : fallback;
}

std::string str(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw Error(ErrorCode::ParseError, fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array() || v.size() != N) {
    throw Error(ErrorCode::ParseError, fmt::format("field '{}' must be an array of {} numbers", key, N));
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw Error(ErrorCode::ParseError, fmt::format("field '{}' must hold numbers", key));
    out(i) = v[i].get<double>();
  }
  return out;
}

Json arr(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

template <class F>
auto parse_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace

Json to_json(const Pose& pose) {
  const Quat& q = pose.orientation;
  return Json{{"position", arr(pose.position)}, {"quaternion", Json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Pose pose_from_json(const Json& j) {
  Pose p;
  p.position = vec<3>(j, "position");
  const Eigen::Vector4d q = vec<4>(j, "quaternion");
  p.orientation = Quat(q(0), q(1), q(2), q(3));
  return p;
}

Json to_json(const TrajectoryPlan& plan) {
  return Json{{"shape", to_string(plan.shape)},
              {"radius_mm", plan.radius_mm},
              {"alpha_deg", plan.alpha_deg},
              {"straight_len_mm", plan.straight_len_mm},
              {"arc_len_mm", plan.arc_len_mm},
              {"entry_pose", to_json(plan.entry_pose)},
              {"label", plan_label(plan)}};
}

TrajectoryPlan plan_from_json(const Json& j) {
  const Shape shape = shape_from_string(str(j, "shape"));
  const double radius = shape == Shape::J ? num(j, "radius_mm") : num_or(j, "radius_mm", 0.0);
  const double alpha = num_or(j, "alpha_deg", 0.0);
  const Pose entry = j.contains("entry_pose") ? pose_from_json(field(j, "entry_pose")) : Pose{};
  return make_plan(shape, radius, alpha, num(j, "straight_len_mm"), num_or(j, "arc_len_mm", 0.0), entry);
}

Json to_json(const BilateralPlan& plan) {
  return Json{{"label", plan.label}, {"left", to_json(plan.left)}, {"right", to_json(plan.right)}};
}

BilateralPlan bilateral_from_json(const Json& j) {
  BilateralPlan b{str(j, "label"), plan_from_json(field(j, "left")), plan_from_json(field(j, "right"))};
  validate(b);
  return b;
}

bool is_bilateral_json(const Json& j) { return j.is_object() && j.contains("left") && j.contains("right"); }

Json to_json(const ScrewParams& s) {
  return Json{{"outer_d_mm", s.outer_d_mm},
              {"root_d_mm", s.root_d_mm},
              {"flex_root_d_mm", s.flex_root_d_mm},
              {"thread_h_mm", s.thread_h_mm},
              {"thread_h_rigid_mm", s.thread_h_rigid_mm},
              {"pitch_mm", s.pitch_mm},
              {"rigid_len_mm", s.rigid_len_mm},
              {"flex_len_mm", s.flex_len_mm},
              {"cannula_d_mm", s.cannula_d_mm},
              {"min_bend_radius_mm", s.min_bend_radius_mm},
              {"thread_count", s.thread_count}};
}

ScrewParams screw_from_json(const Json& j) {
  const ScrewParams d = default_fps();
  ScrewParams s;
  s.outer_d_mm = num_or(j, "outer_d_mm", d.outer_d_mm);
  s.root_d_mm = num_or(j, "root_d_mm", d.root_d_mm);
  s.flex_root_d_mm = num_or(j, "flex_root_d_mm", d.flex_root_d_mm);
  s.thread_h_mm = num_or(j, "thread_h_mm", d.thread_h_mm);
  s.thread_h_rigid_mm = num_or(j, "thread_h_rigid_mm", d.thread_h_rigid_mm);
  s.pitch_mm = num_or(j, "pitch_mm", d.pitch_mm);
  s.rigid_len_mm = num_or(j, "rigid_len_mm", d.rigid_len_mm);
  s.flex_len_mm = num_or(j, "flex_len_mm", d.flex_len_mm);
  s.cannula_d_mm = num_or(j, "cannula_d_mm", d.cannula_d_mm);
  s.min_bend_radius_mm = num_or(j, "min_bend_radius_mm", d.min_bend_radius_mm);
  const double tc = num_or(j, "thread_count", d.thread_count);
  if (tc != static_cast<int>(tc)) throw Error(ErrorCode::ParseError, "thread_count must be an integer");
  s.thread_count = static_cast<int>(tc);
  validate(s);
  return s;
}

Json to_json(const FeasibilityReport& r) {
  return Json{{"feasible", r.feasible},
              {"rigid_chord_max_mm", r.rigid_chord_max_mm},
              {"rigid_margin_mm", r.rigid_margin_mm},
              {"bend_radius_ok", r.bend_radius_ok},
              {"straight_fit_ok", r.straight_fit_ok},
              {"notes", r.notes}};
}

Json to_json(const Timeline& timeline) {
  Json out = Json::array();
  for (const auto& p : timeline.phases) {
    out.push_back(
        Json{{"stage", to_string(p.stage)}, {"duration_s", p.duration_s}, {"speed_mm_s", p.speed_mm_s}, {"rpm", p.rpm}});
  }
  return out;
}

Json to_json(const ControlConfig& c) {
  Json k = Json::array();
  for (int i = 0; i < 6; ++i) k.push_back(c.admittance.k_diag(i));
  return Json{{"z", c.admittance.z},
              {"k_diag", k},
              {"deadzone_n", c.admittance.deadzone_n},
              {"deadzone_nmm", c.admittance.deadzone_nmm},
              {"dt_s", c.dt_s},
              {"straight_speed", c.straight_speed_mm_s},
              {"curve_speed", c.curve_speed_mm_s},
              {"drill_rpm", c.drill_rpm},
              {"retract_rpm", c.retract_rpm},
              {"align_tol_mm", c.align_tol_mm},
              {"align_tol_deg", c.align_tol_deg}};
}

ControlConfig control_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "control config must be a JSON object");
  ControlConfig c;
  c.admittance.z = num_or(j, "z", c.admittance.z);
  if (j.contains("k_diag")) c.admittance.k_diag = vec<6>(j, "k_diag");
  c.admittance.deadzone_n = num_or(j, "deadzone_n", c.admittance.deadzone_n);
  c.admittance.deadzone_nmm = num_or(j, "deadzone_nmm", c.admittance.deadzone_nmm);
  c.dt_s = num_or(j, "dt_s", c.dt_s);
  c.straight_speed_mm_s = num_or(j, "straight_speed", c.straight_speed_mm_s);
  c.curve_speed_mm_s = num_or(j, "curve_speed", c.curve_speed_mm_s);
  c.drill_rpm = num_or(j, "drill_rpm", c.drill_rpm);
  c.retract_rpm = num_or(j, "retract_rpm", c.retract_rpm);
  c.align_tol_mm = num_or(j, "align_tol_mm", c.align_tol_mm);
  c.align_tol_deg = num_or(j, "align_tol_deg", c.align_tol_deg);
  validate(c);
  return c;
}

Json to_json(const PhantomSpec& s) {
  return Json{{"voxel_mm", s.voxel_mm},
              {"body_extent_mm", arr(s.body_extent_mm)},
              {"shell_thickness_mm", s.shell_thickness_mm},
              {"channel_d_mm", s.channel_d_mm},
              {"insert_pcf", s.insert_pcf},
              {"pedicle_len_mm", s.pedicle_len_mm},
              {"body_depth_mm", s.body_depth_mm},
              {"margin_mm", s.margin_mm}};
}

PhantomSpec phantom_spec_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "phantom spec must be a JSON object");
  PhantomSpec s;
  s.voxel_mm = num_or(j, "voxel_mm", s.voxel_mm);
  if (j.contains("body_extent_mm")) s.body_extent_mm = vec<3>(j, "body_extent_mm");
  s.shell_thickness_mm = num_or(j, "shell_thickness_mm", s.shell_thickness_mm);
  s.channel_d_mm = num_or(j, "channel_d_mm", s.channel_d_mm);
  s.insert_pcf = num_or(j, "insert_pcf", s.insert_pcf);
  s.pedicle_len_mm = num_or(j, "pedicle_len_mm", s.pedicle_len_mm);
  s.body_depth_mm = num_or(j, "body_depth_mm", s.body_depth_mm);
  s.margin_mm = num_or(j, "margin_mm", s.margin_mm);
  validate(s);
  return s;
}

Json to_json(const SimLog& log) {
  return Json{{"timeline", to_json(log.timeline)},
              {"cutting_time_s", log.cutting_time_s},
              {"total_time_s", log.total_time_s},
              {"removed_voxels", log.removed_voxels},
              {"removed_volume_mm3", log.removed_volume_mm3},
              {"tunnel_volume_mm3", log.tunnel_volume_mm3},
              {"steps", log.steps},
              {"final_stage", to_string(log.final_stage)}};
}

Json to_json(const TrialReport& r) {
  return Json{{"trial_id", r.trial_id},
              {"direction", to_string(r.direction)},
              {"trajectory_class", r.trajectory_class},
              {"ideal_radius_mm", r.ideal_radius_mm},
              {"icp_rmse_mm", r.icp_rmse_mm},
              {"icp_converged", r.icp_converged},
              {"icp_iterations", r.icp_iterations},
              {"transition_s_mm", r.transition_s_mm},
              {"transition_offset_mm", r.transition_offset_mm},
              {"fitted_radius_mm", r.fitted_radius_mm},
              {"radius_error_pct", r.radius_error_pct},
              {"fit_rmse_mm", r.fit_rmse_mm},
              {"tangent_agreement_deg", r.tangent_agreement_deg},
              {"n_points", r.n_points}};
}

TrialReport trial_report_from_json(const Json& j) {
  return parse_guard([&] {
    TrialReport r;
    r.trial_id = str(j, "trial_id");
    r.direction = direction_from_string(str(j, "direction"));
    r.trajectory_class = str(j, "trajectory_class");
    r.ideal_radius_mm = num(j, "ideal_radius_mm");
    r.icp_rmse_mm = num(j, "icp_rmse_mm");
    r.icp_converged = j.value("icp_converged", true);
    r.icp_iterations = static_cast<int>(num_or(j, "icp_iterations", 0));
    r.transition_s_mm = num(j, "transition_s_mm");
    r.transition_offset_mm = num_or(j, "transition_offset_mm", 0.0);
    r.fitted_radius_mm = num(j, "fitted_radius_mm");
    r.radius_error_pct = num(j, "radius_error_pct");
    r.fit_rmse_mm = num_or(j, "fit_rmse_mm", 0.0);
    r.tangent_agreement_deg = num_or(j, "tangent_agreement_deg", 0.0);
    r.n_points = static_cast<std::size_t>(num(j, "n_points"));
    return r;
  });
}

Json to_json(const ClassSummary& c) {
  return Json{{"trajectory_class", c.trajectory_class},
              {"ideal_radius_mm", c.ideal_radius_mm},
              {"n", c.n},
              {"mean_radius_mm", c.mean_radius_mm},
              {"std_radius_mm", c.std_radius_mm},
              {"min_radius_mm", c.min_radius_mm},
              {"max_radius_mm", c.max_radius_mm},
              {"error_pct", c.error_pct},
              {"mean_error_pct", c.mean_error_pct},
              {"mean_icp_rmse_mm", c.mean_icp_rmse_mm}};
}

Json to_json(const SummaryTable& t) {
  Json classes = Json::array();
  for (const auto& c : t.classes) classes.push_back(to_json(c));
  Json combined = to_json(t.combined);
  combined.erase("mean_icp_rmse_mm");
  return Json{{"classes", classes}, {"combined", combined}};
}

std::string tracker_csv(const TrackerLog& log) {
  std::string out = "t_s,x_mm,y_mm,z_mm,dx,dy,dz\n";
  for (const auto& s : log.samples) {
    out += fmt::format("{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", s.t_s, s.position.x(), s.position.y(),
                       s.position.z(), s.direction.x(), s.direction.y(), s.direction.z());
  }
  return out;
}

namespace {

std::vector<std::vector<double>> parse_csv(const std::string& text, const std::string& header, std::size_t cols) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error(ErrorCode::ParseError, fmt::format("expected CSV header '{}'", header));
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, fmt::format("line {}: bad number '{}'", lineno, cell));
      }
    }
    if (row.size() != cols) {
      throw Error(ErrorCode::ParseError, fmt::format("line {}: expected {} columns, got {}", lineno, cols, row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TrackerLog tracker_from_csv(const std::string& text) {
  TrackerLog log;
  for (const auto& r : parse_csv(text, "t_s,x_mm,y_mm,z_mm,dx,dy,dz", 7)) {
    log.samples.push_back(TrackerSample{r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  return log;
}

std::string cloud_csv(const PointCloud& cloud) {
  std::string out = "x_mm,y_mm,z_mm\n";
  for (const auto& p : cloud) out += fmt::format("{:.9f},{:.9f},{:.9f}\n", p.x(), p.y(), p.z());
  return out;
}

PointCloud cloud_from_csv(const std::string& text) {
  PointCloud cloud;
  for (const auto& r : parse_csv(text, "x_mm,y_mm,z_mm", 3)) cloud.emplace_back(r[0], r[1], r[2]);
  return cloud;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for '{}'", path.string()));
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return parse_guard([&] { return Json::parse(text); });
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace ssf

#include "ssf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ssf/error.hpp"

namespace ssf {

double radius_error(double fitted_mm, double ideal_mm) {
  if (!(ideal_mm > 0.0) || !std::isfinite(ideal_mm)) {
    throw Error(ErrorCode::InvalidArgument, "ideal radius must be positive");
  }
  return 100.0 * std::abs(ideal_mm - fitted_mm) / ideal_mm;
}

namespace {

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

double tangent_agreement(const TrackerLog& log, const RigidTransform& to_model, const TransitionResult& tr,
                         const CircleFit& arc, const std::vector<Vec3>& pts) {
  if (log.samples.empty()) return 0.0;
  // Orient the arc so its tangent at the junction continues the straight segment.
  Vec3 binormal = arc.normal;
  if (binormal.cross(tr.point - arc.center).dot(tr.direction) < 0.0) binormal = -binormal;
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Vec3 ref;
    if (i < tr.split_index) {
      ref = tr.direction;
    } else {
      ref = binormal.cross(pts[i] - arc.center).normalized();
    }
    const Vec3 d = (to_model.rotation * log.samples[i].direction).normalized();
    sum += std::acos(std::clamp(d.dot(ref), -1.0, 1.0));
  }
  return rad2deg(sum / static_cast<double>(pts.size()));
}

}  // namespace

TrialReport evaluate_trial(const TrackerLog& log_in, const TrajectoryPlan& plan, std::span<const Vec3> model_cloud,
                           std::span<const Vec3> measured_cloud, const EvalConfig& cfg) {
  TrialReport rep;
  rep.trial_id = cfg.trial_id;
  rep.direction = cfg.direction;
  rep.trajectory_class = plan_label(plan);
  rep.ideal_radius_mm = plan.shape == Shape::J ? plan.radius_mm : 0.0;

  const TrackerLog log = cfg.direction == Direction::Retraction ? log_in.reversed() : log_in;
  if (log.samples.size() < 2) throw Error(ErrorCode::TooShort, "log has fewer than two samples", "input");

  RigidTransform to_model = RigidTransform::identity();
  if (!measured_cloud.empty()) {
    const IcpResult icp = run_stage("icp", [&] {
      return icp_register(measured_cloud, model_cloud, cfg.icp_init, cfg.icp_max_iter, cfg.icp_tol);
    });
    to_model = icp.transform;
    rep.icp_rmse_mm = icp.rmse_mm;
    rep.icp_converged = icp.converged;
    rep.icp_iterations = icp.iterations;
  }

  std::vector<Vec3> pts;
  pts.reserve(log.samples.size());
  for (const auto& s : log.samples) pts.push_back(to_model.apply(s.position));
  rep.n_points = pts.size();
  const Polyline3 path = Polyline3::from_points(pts);
  if (path.length() < plan.straight_len_mm) {
    throw Error(ErrorCode::TooShort,
                fmt::format("log covers {:.3f} mm, less than the {:.3f} mm straight segment", path.length(),
                            plan.straight_len_mm),
                "input");
  }

  const TransitionResult tr = run_stage("transition", [&] { return detect_transition(path, cfg.transition); });
  if (!plan.curved()) {
    throw Error(ErrorCode::NoTransitionFound, "plan has no curved section", "transition");
  }
  rep.transition_s_mm = tr.transition_s_mm;
  rep.transition_offset_mm = tr.transition_s_mm - plan.straight_len_mm;

  // Path vertices past the junction (from_points drops repeated samples, so use the raw list).
  std::vector<Vec3> curved;
  for (const auto& p : pts) {
    if ((p - tr.point).dot(tr.direction) > 0.0) curved.push_back(p);
  }
  const CircleFit arc = run_stage("circle_fit", [&] { return fit_circle_3d(curved); });
  rep.fitted_radius_mm = arc.radius_mm;
  rep.fit_rmse_mm = arc.rmse_mm;
  rep.radius_error_pct = radius_error(arc.radius_mm, plan.radius_mm);

  TransitionResult tr_raw = tr;
  tr_raw.split_index = static_cast<std::size_t>(
      std::find_if(pts.begin(), pts.end(), [&](const Vec3& p) { return (p - tr.point).dot(tr.direction) > 0.0; }) -
      pts.begin());
  rep.tangent_agreement_deg = tangent_agreement(log, to_model, tr_raw, arc, pts);
  return rep;
}

namespace {

ClassSummary summarize(const std::string& name, const std::vector<const TrialReport*>& rs) {
  ClassSummary c;
  c.trajectory_class = name;
  c.n = rs.size();
  double sum = 0.0, err = 0.0, icp = 0.0;
  c.min_radius_mm = rs.front()->fitted_radius_mm;
  c.max_radius_mm = rs.front()->fitted_radius_mm;
  bool same_ideal = true;
  for (const auto* r : rs) {
    sum += r->fitted_radius_mm;
    err += r->radius_error_pct;
    icp += r->icp_rmse_mm;
    c.min_radius_mm = std::min(c.min_radius_mm, r->fitted_radius_mm);
    c.max_radius_mm = std::max(c.max_radius_mm, r->fitted_radius_mm);
    same_ideal = same_ideal && r->ideal_radius_mm == rs.front()->ideal_radius_mm;
  }
  const double n = static_cast<double>(c.n);
  c.mean_radius_mm = sum / n;
  c.mean_error_pct = err / n;
  c.mean_icp_rmse_mm = icp / n;
  double ss = 0.0;
  for (const auto* r : rs) ss += (r->fitted_radius_mm - c.mean_radius_mm) * (r->fitted_radius_mm - c.mean_radius_mm);
  c.std_radius_mm = c.n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  // Mixed ideals have no single reference; fall back to the mean per-trial error.
  c.ideal_radius_mm = same_ideal ? rs.front()->ideal_radius_mm : 0.0;
  c.error_pct = c.ideal_radius_mm > 0.0 ? radius_error(c.mean_radius_mm, c.ideal_radius_mm) : c.mean_error_pct;
  return c;
}

}  // namespace

SummaryTable aggregate(std::vector<TrialReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no trial reports to aggregate");
  std::stable_sort(reports.begin(), reports.end(),
                   [](const TrialReport& a, const TrialReport& b) { return a.trial_id < b.trial_id; });
  SummaryTable t;
  std::vector<std::string> order;
  for (const auto& r : reports) {
    if (std::find(order.begin(), order.end(), r.trajectory_class) == order.end()) order.push_back(r.trajectory_class);
  }
  std::vector<const TrialReport*> all;
  for (const auto& r : reports) all.push_back(&r);
  for (const auto& name : order) {
    std::vector<const TrialReport*> rs;
    for (const auto& r : reports) {
      if (r.trajectory_class == name) rs.push_back(&r);
    }
    t.classes.push_back(summarize(name, rs));
  }
  t.combined = summarize("Combined", all);
  return t;
}

std::string render_table(const SummaryTable& table) {
  std::vector<std::string> header{"", "Ideal"};
  std::vector<std::string> radius{"Radius of Curvature (mm)"};
  std::vector<std::string> error{"Error"};
  std::vector<std::string> icp{"ICP RMSE (mm)"};
  const double ideal = table.combined.ideal_radius_mm;
  radius.push_back(ideal > 0.0 ? fmt::format("{:.2f}", ideal) : "-");
  error.push_back("-");
  icp.push_back("-");
  for (const auto& c : table.classes) {
    header.push_back(c.trajectory_class);
    radius.push_back(fmt::format("{:.2f} ± {:.2f}", c.mean_radius_mm, c.std_radius_mm));
    error.push_back(fmt::format("{:.2f}%", c.error_pct));
    icp.push_back(fmt::format("{:.4f}", c.mean_icp_rmse_mm));
  }
  header.push_back("Combined");
  radius.push_back(fmt::format("{:.2f} ± {:.2f}", table.combined.mean_radius_mm, table.combined.std_radius_mm));
  error.push_back(fmt::format("{:.2f}%", table.combined.error_pct));
  icp.push_back("");

  // Column widths in code points so the super/subscript labels line up.
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
    return n;
  };
  const std::vector<std::vector<std::string>*> rows{&header, &radius, &error, &icp};
  std::vector<std::size_t> w(header.size(), 0);
  for (const auto* row : rows) {
    for (std::size_t i = 0; i < row->size(); ++i) w[i] = std::max(w[i], width((*row)[i]));
  }
  std::string out;
  for (const auto* row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row->size(); ++i) {
      const std::string& cell = (*row)[i];
      const std::string pad(w[i] - width(cell), ' ');
      line += i == 0 ? cell + pad : "  " + pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace ssf

// ssf: plan, simulate and evaluate curved pedicle drilling trajectories.

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ssf/control.hpp"
#include "ssf/drill_sim.hpp"
#include "ssf/error.hpp"
#include "ssf/evaluation.hpp"
#include "ssf/io.hpp"
#include "ssf/logging.hpp"
#include "ssf/phantom.hpp"
#include "ssf/screw.hpp"
#include "ssf/session.hpp"
#include "ssf/tracker.hpp"
#include "ssf/trajectory.hpp"

namespace fs = std::filesystem;
using namespace ssf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSimulation = 3;
constexpr int kExitEvaluation = 4;

void fail(const std::string& msg) { std::cerr << "ssf: " << msg << "\n"; }

void emit_json(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(out, j);
  }
}

// ---------------------------------------------------------------- plan

struct PlanArgs {
  std::string shape = "J";
  double radius = 50.0;
  double alpha = 0.0;
  double straight = 17.0;
  double arc = 35.0;
  std::vector<std::string> pair;
  std::string out;
};

std::string flag_for(const Error& e, double straight, double arc, double radius, double alpha) {
  switch (e.code()) {
    case ErrorCode::NonPositiveRadius: return "--radius";
    case ErrorCode::ArcTooLong: return "--arc";
    case ErrorCode::NegativeLength: return straight < 0.0 ? "--straight" : "--arc";
    case ErrorCode::NonFinite:
      if (!std::isfinite(radius)) return "--radius";
      if (!std::isfinite(alpha)) return "--alpha";
      if (!std::isfinite(straight)) return "--straight";
      return "--arc";
    default: return "--shape";
  }
}

TrajectoryPlan plan_from_args(const std::string& shape_s, double radius, double alpha, double straight, double arc,
                              const std::string& flag_prefix) {
  Shape shape;
  try {
    shape = shape_from_string(shape_s);
  } catch (const Error& e) {
    throw Error(e.code(), flag_prefix + "--shape: " + e.detail());
  }
  try {
    return make_plan(shape, radius, alpha, straight, arc);
  } catch (const Error& e) {
    const std::string flag = flag_prefix.empty() ? flag_for(e, straight, arc, radius, alpha) : flag_prefix;
    throw Error(e.code(), flag + ": " + std::string(to_string(e.code())) + ": " + e.detail());
  }
}

int run_plan(const PlanArgs& a) {
  try {
    if (!a.pair.empty()) {
      if (a.pair.size() != 2) throw Error(ErrorCode::InvalidArgument, "--pair: expects exactly two plans");
      std::vector<TrajectoryPlan> sides;
      for (const auto& spec : a.pair) {
        // SHAPE[:RADIUS[:ALPHA]], e.g. J:50:90 or I
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.empty() || parts.size() > 3) {
          throw Error(ErrorCode::InvalidArgument, "--pair: '" + spec + "' is not SHAPE[:RADIUS[:ALPHA]]");
        }
        double radius = parts[0] == "I" ? 0.0 : a.radius;
        double alpha = 0.0;
        try {
          if (parts.size() > 1) radius = std::stod(parts[1]);
          if (parts.size() > 2) alpha = std::stod(parts[2]);
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidArgument, "--pair: '" + spec + "' has a non-numeric field");
        }
        const double arc = parts[0] == "I" ? 0.0 : a.arc;
        sides.push_back(plan_from_args(parts[0], radius, alpha, a.straight, arc, "--pair"));
        if (parts[0] == "I") {
          // An I side is a straight tunnel as long as the J side's full length.
          sides.back() = make_plan(Shape::I, 0.0, 0.0, a.straight + a.arc, 0.0);
        }
      }
      emit_json(to_json(make_bilateral(sides[0], sides[1])), a.out);
    } else {
      emit_json(to_json(plan_from_args(a.shape, a.radius, a.alpha, a.straight, a.arc, "")), a.out);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) {
      fail(e.detail());
      return kExitFailure;
    }
    fail(e.detail());
    return kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
  std::string spec_in;
  double voxel = 0.0;
  std::string out;
  std::string cloud;
  double spacing = 0.5;
};

int run_phantom(const PhantomArgs& a) {
  try {
    PhantomSpec spec = a.spec_in.empty() ? PhantomSpec{} : phantom_spec_from_json(read_json_file(a.spec_in));
    if (a.voxel > 0.0) spec.voxel_mm = a.voxel;
    validate(spec);
    emit_json(to_json(spec), a.out);
    if (!a.cloud.empty()) {
      const VoxelPhantom ph(spec);
      write_text_file(a.cloud, cloud_csv(ph.surface_cloud(a.spacing)));
    }
  } catch (const Error& e) {
    fail(e.what());
    return e.code() == ErrorCode::IoError ? kExitFailure : kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string plan;
  std::string phantom;
  std::string config;
  double noise = 0.2;
  std::uint64_t seed = 42;
  double dt = 0.0;
  double hz = 20.0;
  double speed = 2.0;
  std::string direction = "insertion";
  std::string out_dir = ".";
  std::vector<double> offset;
  bool tracker_frame = false;
  double cloud_spacing = 1.3;
};

// Tracker frame relative to the model: a rotation of at most 5 deg and a
// translation of at most 3 mm, drawn from the seed.
RigidTransform tracker_frame_from_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 axis(g(rng), g(rng), g(rng));
  Vec3 shift(g(rng), g(rng), g(rng));
  return RigidTransform::from_axis_angle(axis.normalized(), deg2rad(5.0 * u(rng)), 3.0 * u(rng) * shift.normalized());
}

struct SideResult {
  SimLog log;
  TrackerLog tracker;
};

SideResult simulate_side(const TrajectoryPlan& plan, const PhantomSpec& spec, const ControlConfig& cfg,
                         const SimulateArgs& a) {
  VoxelPhantom phantom(spec);
  SideResult r;
  if (a.offset.empty()) {
    r.log = simulate_procedure(plan, phantom, cfg, prealigned_operator());
  } else {
    Pose start = plan.entry_pose;
    start.position += Vec3(a.offset[0], a.offset[1], a.offset[2]);
    r.log = simulate_procedure(plan, phantom, cfg, steering_operator(plan), start);
  }
  TrackerOptions topt;
  topt.sample_hz = a.hz;
  topt.noise_sigma_mm = a.noise;
  topt.seed = a.seed;
  topt.insertion_speed_mm_s = a.speed;
  topt.direction = direction_from_string(a.direction);
  r.tracker = synthesize_tracker_log(drilled_path(r.log), topt);
  return r;
}

int run_simulate(const SimulateArgs& a) {
  std::vector<std::pair<std::string, TrajectoryPlan>> sides;
  PhantomSpec spec;
  ControlConfig cfg;
  try {
    const Json pj = read_json_file(a.plan);
    if (is_bilateral_json(pj)) {
      const BilateralPlan b = bilateral_from_json(pj);
      sides = {{"left_", b.left}, {"right_", b.right}};
    } else {
      sides = {{"", plan_from_json(pj)}};
    }
    if (!a.phantom.empty()) spec = phantom_spec_from_json(read_json_file(a.phantom));
    if (!a.config.empty()) cfg = control_config_from_json(read_json_file(a.config));
    if (a.dt > 0.0) cfg.dt_s = a.dt;
    validate(cfg);
    if (!a.offset.empty() && a.offset.size() != 3) {
      throw Error(ErrorCode::InvalidArgument, "--offset: expects three numbers");
    }
    direction_from_string(a.direction);
  } catch (const Error& e) {
    fail(e.what());
    return kExitSimulation;
  }

  try {
    const RigidTransform frame = a.tracker_frame ? tracker_frame_from_seed(a.seed) : RigidTransform::identity();
    for (const auto& [prefix, plan] : sides) {
      SideResult r = simulate_side(plan, spec, cfg, a);
      for (auto& s : r.tracker.samples) {
        s.position = frame.apply(s.position);
        s.direction = frame.rotation * s.direction;
      }
      const fs::path dir(a.out_dir);
      Json summary = to_json(r.log);
      summary["plan"] = plan_label(plan);
      summary["direction"] = a.direction;
      summary["noise_sigma_mm"] = a.noise;
      summary["seed"] = a.seed;
      write_json_file(dir / (prefix + "sim.json"), summary);
      write_text_file(dir / (prefix + "tracker.csv"), tracker_csv(r.tracker));
      if (a.tracker_frame) {
        // The phantom surface as the tracker sees it, for registration.
        const VoxelPhantom ph(spec);
        PointCloud cloud = frame.apply(ph.surface_cloud(a.cloud_spacing));
        std::mt19937_64 rng(a.seed + 1);
        std::normal_distribution<double> g(0.0, a.noise / std::sqrt(3.0));
        if (a.noise > 0.0) {
          for (auto& p : cloud) p += Vec3(g(rng), g(rng), g(rng));
        }
        write_text_file(dir / (prefix + "surface_measured.csv"), cloud_csv(cloud));
      }
      std::cout << fmt::format("{}cutting_time_s={:.3f}\n", prefix, r.log.cutting_time_s);
      std::cout << fmt::format("{}total_time_s={:.3f}\n", prefix, r.log.total_time_s);
      std::cout << fmt::format("{}removed_voxels={}\n", prefix, r.log.removed_voxels);
    }
  } catch (const Error& e) {
    fail(e.what());
    switch (e.code()) {
      case ErrorCode::MisalignedEntry:
      case ErrorCode::PlanPhantomMismatch: return kExitSimulation;
      default: return kExitFailure;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate / report

struct EvaluateArgs {
  std::string log;
  std::string plan;
  std::string model;
  std::string measured;
  std::string direction = "insertion";
  std::string trial_id = "trial";
  std::string side;
  double window = 3.0;
  double dev_tol = 0.3;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  try {
    const TrackerLog log = tracker_from_csv(read_text_file(a.log));
    const Json pj = read_json_file(a.plan);
    TrajectoryPlan plan;
    if (is_bilateral_json(pj)) {
      const BilateralPlan b = bilateral_from_json(pj);
      if (a.side != "left" && a.side != "right") {
        throw Error(ErrorCode::InvalidArgument, "--side left|right is required for a bilateral plan");
      }
      plan = a.side == "left" ? b.left : b.right;
    } else {
      plan = plan_from_json(pj);
    }
    PointCloud model, measured;
    if (!a.model.empty()) model = cloud_from_csv(read_text_file(a.model));
    if (!a.measured.empty()) {
      if (model.empty()) throw Error(ErrorCode::InvalidArgument, "--measured needs --model");
      measured = cloud_from_csv(read_text_file(a.measured));
    }
    EvalConfig cfg;
    cfg.trial_id = a.trial_id;
    cfg.direction = direction_from_string(a.direction);
    cfg.transition.window_mm = a.window;
    cfg.transition.dev_tol_mm = a.dev_tol;
    const TrialReport rep = evaluate_trial(log, plan, model, measured, cfg);
    emit_json(to_json(rep), a.out);
  } catch (const Error& e) {
    fail(e.what());
    return kExitEvaluation;
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> globs;
  std::string out;
};

int run_report(const ReportArgs& a) {
  try {
    std::set<std::string> files;
    for (const auto& pattern : a.globs) {
      glob_t g{};
      if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) files.insert(g.gl_pathv[i]);
      }
      ::globfree(&g);
    }
    std::vector<TrialReport> reports;
    for (const auto& f : files) {
      try {
        reports.push_back(trial_report_from_json(read_json_file(f)));
      } catch (const Error& e) {
        throw Error(e.code(), f + ": " + e.detail(), "input");
      }
    }
    if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no trial reports matched", "aggregate");
    const SummaryTable table = aggregate(reports);
    std::cout << render_table(table);
    if (!a.out.empty()) write_json_file(a.out, to_json(table));
  } catch (const Error& e) {
    fail(e.what());
    return kExitEvaluation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- screw / schedule

struct ScrewArgs {
  std::string params;
  std::string plan;
  double bore = kBallNoseDiameterMm;
  std::string stl;
  double tol = 0.05;
  std::string out;
};

int run_screw(const ScrewArgs& a) {
  try {
    const ScrewParams screw = a.params.empty() ? default_fps() : screw_from_json(read_json_file(a.params));
    Json out{{"screw", to_json(screw)}};
    if (!a.plan.empty()) {
      const Json pj = read_json_file(a.plan);
      if (is_bilateral_json(pj)) {
        const BilateralPlan b = bilateral_from_json(pj);
        out["left"] = to_json(check_feasibility(screw, b.left, a.bore));
        out["right"] = to_json(check_feasibility(screw, b.right, a.bore));
      } else {
        out["feasibility"] = to_json(check_feasibility(screw, plan_from_json(pj), a.bore));
      }
    }
    if (!a.stl.empty()) {
      std::ostringstream ss;
      const std::size_t facets = write_screw_stl(screw, ss, a.tol);
      write_text_file(a.stl, ss.str());
      out["stl_facets"] = facets;
    }
    emit_json(out, a.out);
  } catch (const Error& e) {
    fail(e.what());
    return e.code() == ErrorCode::IoError ? kExitFailure : kExitUsage;
  }
  return kExitOk;
}

struct ScheduleArgs {
  std::string plan;
  std::string config;
  std::string out;
};

int run_schedule(const ScheduleArgs& a) {
  try {
    const TrajectoryPlan plan = plan_from_json(read_json_file(a.plan));
    const ControlConfig cfg = a.config.empty() ? ControlConfig{} : control_config_from_json(read_json_file(a.config));
    const Timeline t = procedure_schedule(plan, cfg);
    Json out{{"plan", plan_label(plan)},
             {"phases", to_json(t)},
             {"cutting_time_s", t.cutting_time_s()},
             {"total_time_s", t.total_time_s()}};
    emit_json(out, a.out);
  } catch (const Error& e) {
    fail(e.what());
    return e.code() == ErrorCode::IoError ? kExitFailure : kExitUsage;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string plan;
  std::string phantom;
  std::string config;
  std::string host = "127.0.0.1";
  int port = 7878;
  double time_scale = 1.0;
  bool exit_on_done = false;
  std::vector<double> offset;
  double noise = 0.0;
  std::uint64_t seed = 42;
};

int run_serve(const ServeArgs& a) {
  try {
    SessionOptions opts;
    opts.plan = plan_from_json(read_json_file(a.plan));
    if (!a.phantom.empty()) opts.phantom = phantom_spec_from_json(read_json_file(a.phantom));
    if (!a.config.empty()) opts.control = control_config_from_json(read_json_file(a.config));
    opts.start_pose = opts.plan.entry_pose;
    if (!a.offset.empty()) {
      if (a.offset.size() != 3) throw Error(ErrorCode::InvalidArgument, "--offset: expects three numbers");
      opts.start_pose.position += Vec3(a.offset[0], a.offset[1], a.offset[2]);
    }
    opts.report_noise_mm = a.noise;
    opts.report_seed = a.seed;
    Session session(opts);
    ServerOptions sopts;
    sopts.host = a.host;
    sopts.port = a.port;
    sopts.time_scale = a.time_scale;
    sopts.exit_on_done = a.exit_on_done;
    SessionServer server(session, sopts);
    std::cout << "listening on " << a.host << ":" << server.port() << std::endl;
    server.run();
  } catch (const Error& e) {
    fail(e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Curved pedicle drilling: plan, simulate, evaluate"};
  app.require_subcommand(1);

  PlanArgs plan_a;
  auto* plan = app.add_subcommand("plan", "Write a trajectory plan (or a bilateral pair) as JSON");
  plan->add_option("--shape", plan_a.shape, "I or J")->capture_default_str();
  plan->add_option("--radius", plan_a.radius, "Radius of curvature, mm")->capture_default_str();
  plan->add_option("--alpha", plan_a.alpha, "Curve orientation about the insertion axis, deg")->capture_default_str();
  plan->add_option("--straight", plan_a.straight, "Straight segment length, mm")->capture_default_str();
  plan->add_option("--arc", plan_a.arc, "Arc length of the curved segment, mm")->capture_default_str();
  plan->add_option("--pair", plan_a.pair, "Two plans SHAPE[:RADIUS[:ALPHA]] for a bilateral pair")->expected(2);
  plan->add_option("--out", plan_a.out, "Output file (stdout if omitted)");

  PhantomArgs ph_a;
  auto* phantom = app.add_subcommand("phantom", "Write a phantom spec and optionally its surface cloud");
  phantom->add_option("--spec", ph_a.spec_in, "Phantom spec JSON to start from");
  phantom->add_option("--voxel", ph_a.voxel, "Voxel edge, mm");
  phantom->add_option("--out", ph_a.out, "Output spec file (stdout if omitted)");
  phantom->add_option("--cloud", ph_a.cloud, "Write the model surface cloud CSV here");
  phantom->add_option("--spacing", ph_a.spacing, "Surface sample spacing, mm")->capture_default_str();

  SimulateArgs sim_a;
  auto* sim = app.add_subcommand("simulate", "Run the drilling procedure headless and write a tracker log");
  sim->add_option("--plan", sim_a.plan, "Plan JSON")->required();
  sim->add_option("--phantom", sim_a.phantom, "Phantom spec JSON (default phantom if omitted)");
  sim->add_option("--config", sim_a.config, "Control config JSON");
  sim->add_option("--noise", sim_a.noise, "Tracker noise, 3D RMS mm")->capture_default_str();
  sim->add_option("--seed", sim_a.seed, "Noise seed")->capture_default_str();
  sim->add_option("--dt", sim_a.dt, "Control period, s");
  sim->add_option("--hz", sim_a.hz, "Tracker sample rate")->capture_default_str();
  sim->add_option("--speed", sim_a.speed, "Screw insertion speed for the tracker log, mm/s")->capture_default_str();
  sim->add_option("--direction", sim_a.direction, "insertion or retraction")->capture_default_str();
  sim->add_option("--out-dir", sim_a.out_dir, "Output directory")->capture_default_str();
  sim->add_option("--offset", sim_a.offset, "Start this far from the entry (x y z, mm) and steer in")->expected(3);
  sim->add_flag("--tracker-frame", sim_a.tracker_frame,
                "Express the log in a perturbed tracker frame and write the measured surface cloud");
  sim->add_option("--cloud-spacing", sim_a.cloud_spacing, "Measured surface spacing, mm")->capture_default_str();

  EvaluateArgs ev_a;
  auto* ev = app.add_subcommand("evaluate", "Evaluate one tracker log against its plan");
  ev->add_option("--log", ev_a.log, "Tracker CSV")->required();
  ev->add_option("--plan", ev_a.plan, "Plan JSON")->required();
  ev->add_option("--model", ev_a.model, "Model surface cloud CSV");
  ev->add_option("--measured", ev_a.measured, "Measured surface cloud CSV (tracker frame)");
  ev->add_option("--direction", ev_a.direction, "insertion or retraction")->capture_default_str();
  ev->add_option("--trial-id", ev_a.trial_id, "Trial identifier")->capture_default_str();
  ev->add_option("--side", ev_a.side, "left or right, for bilateral plans");
  ev->add_option("--window", ev_a.window, "Transition window, mm")->capture_default_str();
  ev->add_option("--dev-tol", ev_a.dev_tol, "Transition deviation tolerance, mm")->capture_default_str();
  ev->add_option("--out", ev_a.out, "Report JSON (stdout if omitted)");

  ReportArgs rep_a;
  auto* rep = app.add_subcommand("report", "Summarize trial reports as a table");
  rep->add_option("--glob", rep_a.globs, "Report file pattern(s)")->required();
  rep->add_option("--out", rep_a.out, "Also write the summary as JSON");

  ScrewArgs sc_a;
  auto* screw = app.add_subcommand("screw", "Screw parameters, feasibility check and STL export");
  screw->add_option("--params", sc_a.params, "Screw parameter JSON (default screw if omitted)");
  screw->add_option("--plan", sc_a.plan, "Check feasibility against this plan");
  screw->add_option("--bore", sc_a.bore, "Tunnel bore, mm")->capture_default_str();
  screw->add_option("--stl", sc_a.stl, "Write an ASCII STL of the screw");
  screw->add_option("--tol", sc_a.tol, "STL tessellation tolerance, mm")->capture_default_str();
  screw->add_option("--out", sc_a.out, "Output JSON (stdout if omitted)");

  ScheduleArgs sch_a;
  auto* sched = app.add_subcommand("schedule", "Print the planned stage timeline");
  sched->add_option("--plan", sch_a.plan, "Plan JSON")->required();
  sched->add_option("--config", sch_a.config, "Control config JSON");
  sched->add_option("--out", sch_a.out, "Output JSON (stdout if omitted)");

  ServeArgs sv_a;
  auto* serve = app.add_subcommand("serve", "Run an interactive session over TCP (newline-delimited JSON)");
  serve->add_option("--plan", sv_a.plan, "Plan JSON")->required();
  serve->add_option("--phantom", sv_a.phantom, "Phantom spec JSON");
  serve->add_option("--config", sv_a.config, "Control config JSON");
  serve->add_option("--host", sv_a.host, "Listen address")->capture_default_str();
  serve->add_option("--port", sv_a.port, "Listen port (0 picks one)")->capture_default_str();
  serve->add_option("--time-scale", sv_a.time_scale, "Simulated seconds per wall second; 0 runs unthrottled")
      ->capture_default_str();
  serve->add_flag("--exit-on-done", sv_a.exit_on_done, "Exit after the final report is sent");
  serve->add_option("--offset", sv_a.offset, "Start pose offset from the entry (x y z, mm)")->expected(3);
  serve->add_option("--noise", sv_a.noise, "Tracker noise for the final report, mm")->capture_default_str();
  serve->add_option("--seed", sv_a.seed, "Noise seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  if (*plan) return run_plan(plan_a);
  if (*phantom) return run_phantom(ph_a);
  if (*sim) return run_simulate(sim_a);
  if (*ev) return run_evaluate(ev_a);
  if (*rep) return run_report(rep_a);
  if (*screw) return run_screw(sc_a);
  if (*sched) return run_schedule(sch_a);
  if (*serve) return run_serve(sv_a);
  return kExitFailure;
}

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include <fmt/format.h>

#include "doctest.h"
#include "ssf/io.hpp"

using namespace ssf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SSF_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ssf_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("plan subcommand") {
  TempDir d("plan");
  const Run r = run("plan --shape J --radius 50 --alpha 90 --straight 17 --arc 35 --out " + (d / "p.json"));
  REQUIRE(r.code == 0);
  const TrajectoryPlan p = plan_from_json(read_json_file(d / "p.json"));
  CHECK(p.radius_mm == 50);
  CHECK(p.alpha_deg == 90);
  CHECK(plan_label(p) == "J⁹⁰₅₀");

  const Run bad = run("plan --shape J --radius -5");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("NonPositiveRadius") != std::string::npos);
  CHECK(run("plan --bogus").code == 2);

  const Run pair = run("plan --pair J:50:0 J:50:180");
  REQUIRE(pair.code == 0);
  CHECK(is_bilateral_json(Json::parse(pair.out)));
}

TEST_CASE("simulate is deterministic per seed") {
  TempDir d("sim");
  REQUIRE(run("plan --shape J --radius 50 --alpha 0 --straight 17 --arc 35 --out " + (d / "p.json")).code == 0);
  REQUIRE(run("phantom --voxel 0.4 --out " + (d / "ph.json")).code == 0);
  const std::string common = "simulate --plan " + (d / "p.json") + " --phantom " + (d / "ph.json") + " --seed 9";
  const Run a = run(common + " --out-dir " + (d / "a"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("cutting_time_s=34.500") != std::string::npos);
  REQUIRE(run(common + " --out-dir " + (d / "b")).code == 0);
  CHECK(read_text_file(d / "a/tracker.csv") == read_text_file(d / "b/tracker.csv"));
  CHECK(read_text_file(d / "a/sim.json") == read_text_file(d / "b/sim.json"));
  REQUIRE(run("simulate --plan " + (d / "p.json") + " --phantom " + (d / "ph.json") + " --seed 10 --out-dir " +
              (d / "c"))
              .code == 0);
  CHECK(read_text_file(d / "a/tracker.csv") != read_text_file(d / "c/tracker.csv"));

  CHECK(run("simulate --plan " + (d / "p.json") + " --phantom " + (d / "missing.json")).code == 3);
  CHECK(run("simulate --plan " + (d / "p.json") + " --offset 0 10 0 --out-dir " + (d / "o")).code == 0);
}

TEST_CASE("evaluate a noiseless log") {
  TempDir d("eval");
  REQUIRE(run("plan --shape J --radius 50 --alpha 0 --straight 17 --arc 35 --out " + (d / "p.json")).code == 0);
  REQUIRE(run("phantom --voxel 0.4 --out " + (d / "ph.json") + " --cloud " + (d / "model.csv")).code == 0);
  REQUIRE(run("simulate --plan " + (d / "p.json") + " --phantom " + (d / "ph.json") + " --noise 0 --tracker-frame --out-dir " +
              (d / "s"))
              .code == 0);
  const Run r = run("evaluate --log " + (d / "s/tracker.csv") + " --plan " + (d / "p.json") + " --model " +
                    (d / "model.csv") + " --measured " + (d / "s/surface_measured.csv") + " --out " + (d / "r.json"));
  REQUIRE(r.code == 0);
  const TrialReport rep = trial_report_from_json(read_json_file(d / "r.json"));
  CHECK(fmt::format("{:.2f}", rep.fitted_radius_mm) == "50.00");
  CHECK(run("evaluate --log " + (d / "nope.csv") + " --plan " + (d / "p.json")).code == 4);
}

TEST_CASE("report over several trials per class") {
  TempDir d("report");
  REQUIRE(run("phantom --voxel 0.4 --out " + (d / "ph.json")).code == 0);
  for (int alpha : {0, 90}) {
    const std::string plan = d / fmt::format("p{}.json", alpha);
    REQUIRE(run(fmt::format("plan --shape J --radius 50 --alpha {} --straight 17 --arc 35 --out {}", alpha, plan))
                .code == 0);
    for (int k = 0; k < 6; ++k) {
      const std::string dir = d / fmt::format("a{}_{}", alpha, k);
      REQUIRE(run(fmt::format("simulate --plan {} --phantom {} --seed {} --out-dir {}", plan, d / "ph.json",
                              100 + k, dir))
                  .code == 0);
      REQUIRE(run(fmt::format("evaluate --log {}/tracker.csv --plan {} --trial-id J{}-{} --out {}", dir, plan, alpha,
                              k, d / fmt::format("trial_{}_{}.json", alpha, k)))
                  .code == 0);
    }
  }
  const Run r = run("report --glob '" + (d / "trial_*.json") + "' --out " + (d / "summary.json"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Radius of Curvature (mm)") != std::string::npos);
  CHECK(r.out.find("J⁰₅₀") != std::string::npos);
  CHECK(r.out.find("J⁹⁰₅₀") != std::string::npos);
  const Json summary = read_json_file(d / "summary.json");
  CHECK(summary["combined"]["n"] == 12);
  CHECK(summary["classes"].size() == 2);

  const Run empty = run("report --glob '" + (d / "none_*.json") + "'");
  CHECK(empty.code == 4);
  CHECK(empty.out.find("EmptyInput") != std::string::npos);
}

TEST_CASE("screw and schedule subcommands") {
  TempDir d("screw");
  REQUIRE(run("plan --shape J --radius 50 --alpha 0 --straight 17 --arc 35 --out " + (d / "p.json")).code == 0);
  const Run s = run("schedule --plan " + (d / "p.json"));
  REQUIRE(s.code == 0);
  CHECK(s.out.find("34.5") != std::string::npos);
  const Run f = run("screw --plan " + (d / "p.json") + " --stl " + (d / "screw.stl"));
  REQUIRE(f.code == 0);
  CHECK(Json::parse(f.out).contains("feasibility"));
  CHECK(read_text_file(d / "screw.stl").rfind("solid", 0) == 0);
}

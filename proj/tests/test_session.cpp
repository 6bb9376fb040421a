#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "doctest.h"
#include "ssf/session.hpp"

using namespace ssf;

namespace {

SessionOptions base_options() {
  SessionOptions o;
  o.plan = make_plan(Shape::J, 50, 0, 17, 35);
  o.phantom.voxel_mm = 0.4;
  o.control.admittance.deadzone_n = 0.0;
  o.start_pose = o.plan.entry_pose;
  return o;
}

std::vector<Json> parse_all(const std::vector<std::string>& lines) {
  std::vector<Json> out;
  for (const auto& l : lines) out.push_back(Json::parse(l));
  return out;
}

std::string wrench_line(std::int64_t seq, const Vec3& f) {
  return Json{{"type", "wrench"}, {"seq", seq}, {"f", {f.x(), f.y(), f.z()}}, {"tau", {0, 0, 0}}}.dump();
}

std::string command_line(std::int64_t seq, const std::string& name) {
  return Json{{"type", "command"}, {"seq", seq}, {"name", name}}.dump();
}

// Runs the session to the end, collecting every message it emits.
std::vector<Json> drain(Session& s, std::size_t max_ticks = 200000) {
  std::vector<Json> out;
  for (std::size_t i = 0; i < max_ticks && !s.report_sent(); ++i) {
    for (auto& m : parse_all(s.tick())) out.push_back(std::move(m));
  }
  return out;
}

class Client {
 public:
  explicit Client(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    connected_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  }
  ~Client() { close(); }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  bool connected() const { return connected_; }
  void send(const std::string& line) {
    const std::string data = line + "\n";
    (void)::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
  }
  // Next message, or null on timeout.
  Json recv(int timeout_ms = 2000) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        const std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return Json::parse(line);
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return nullptr;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return nullptr;
      char tmp[4096];
      const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
      if (n <= 0) return nullptr;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }
  // Latest state message currently available (waits for at least one).
  Json latest_state(int timeout_ms = 2000) {
    Json last = nullptr;
    for (Json m = recv(timeout_ms); !m.is_null(); m = recv(last.is_null() ? timeout_ms : 5)) {
      if (m["type"] == "state") last = m;
    }
    return last;
  }

 private:
  int fd_ = -1;
  bool connected_ = false;
  std::string buf_;
};

}  // namespace

TEST_CASE("a 1 N wrench at 20 Hz for 1 s moves the tool 15 mm") {
  Session s(base_options());
  s.tick();  // Idle -> Admittance
  REQUIRE(s.state().stage == Stage::Admittance);
  const Vec3 start = s.state().tool_pose.position;
  std::int64_t seq = 0;
  // 100 control periods of 10 ms; a new wrench arrives every fifth period.
  for (int k = 0; k < 100; ++k) {
    if (k % 5 == 0) s.handle_line(wrench_line(++seq, Vec3(0, 1, 0)));
    s.tick();
  }
  const Vec3 moved = s.state().tool_pose.position - start;
  CHECK(moved.y() == doctest::Approx(15.0).epsilon(1e-9));
  CHECK(std::abs(moved.x()) < 1e-12);
  // Without new wrenches the tool stops once the last one expires.
  for (int k = 0; k < 100; ++k) s.tick();
  const double coast = (s.state().tool_pose.position - start).y() - 15.0;
  CHECK(coast >= 0.2 * 15.0 - 1e-9);
  CHECK(coast <= (0.25 + 0.01) * 15.0 + 1e-9);
}

TEST_CASE("start is refused away from the entry") {
  SessionOptions o = base_options();
  o.start_pose.position += Vec3(0, 10, 0);
  Session s(o);
  s.tick();
  const auto out = parse_all(s.handle_line(command_line(1, "start_autonomous")));
  REQUIRE(out.size() == 1);
  CHECK(out[0]["type"] == "error");
  CHECK(out[0]["code"] == "MisalignedEntry");
  CHECK(out[0]["echo_seq"] == 1);
  s.tick();
  CHECK(s.state().stage == Stage::Admittance);

  Session idle(base_options());
  const auto early = parse_all(idle.handle_line(command_line(1, "start_autonomous")));
  CHECK(early.at(0)["code"] == "StageInputMismatch");
}

TEST_CASE("malformed messages get errors that echo the seq") {
  Session s(base_options());
  auto out = parse_all(s.handle_line("{not json"));
  CHECK(out.at(0)["code"] == "ParseError");
  CHECK(out.at(0)["echo_seq"].is_null());
  out = parse_all(s.handle_line(R"({"type":"wrench","seq":7,"f":[1,2],"tau":[0,0,0]})"));
  CHECK(out.at(0)["code"] == "ParseError");
  CHECK(out.at(0)["echo_seq"] == 7);
  out = parse_all(s.handle_line(R"({"type":"wrench","f":[1,2,3],"tau":[0,0,0]})"));
  CHECK(out.at(0)["code"] == "ParseError");
  out = parse_all(s.handle_line(R"({"type":"dance","seq":9})"));
  CHECK(out.at(0)["echo_seq"] == 9);
  out = parse_all(s.handle_line(wrench_line(8, Vec3(1, 0, 0))));
  CHECK(out.at(0)["code"] == "InvalidArgument");  // seq went backwards
  CHECK(s.handle_line(wrench_line(10, Vec3(1, 0, 0))).empty());
}

TEST_CASE("full run: cutting time, gapless seq, report") {
  Session s(base_options());
  std::vector<Json> all;
  for (auto& m : parse_all(s.tick())) all.push_back(m);
  for (auto& m : parse_all(s.handle_line(command_line(1, "start_autonomous")))) all.push_back(m);
  for (auto& m : drain(s)) all.push_back(m);
  REQUIRE(s.report_sent());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i]["seq"] == i + 1);
  const Json& report = all.back();
  REQUIRE(report["type"] == "report");
  CHECK(std::abs(report["cutting_time_s"].get<double>() - 34.5) <= 0.1);
  CHECK(report["removed_voxels"].get<std::size_t>() > 0);
  REQUIRE(report["trial"].is_object());
  CHECK(std::abs(report["trial"]["fitted_radius_mm"].get<double>() - 50.0) <= 0.05);

  std::size_t removed = 0;
  for (const auto& m : all) {
    if (m["type"] == "state") {
      CHECK(m["version"] == kProtocolVersion);
      removed += m["removed"].get<std::size_t>();
    }
  }
  CHECK(removed == report["removed_voxels"].get<std::size_t>());

  // Reset starts over with an intact phantom.
  const auto after = parse_all(s.handle_line(command_line(2, "reset")));
  CHECK(after.at(0)["stage"] == "Idle");
  CHECK(after.at(0)["removed_total"] == 0);
  CHECK_FALSE(s.done());
}

TEST_CASE("abort retracts and finishes") {
  Session s(base_options());
  s.tick();
  s.handle_line(command_line(1, "start_autonomous"));
  for (int k = 0; k < 500; ++k) s.tick();
  CHECK(s.state().stage == Stage::AutonomousStraight);
  s.handle_line(command_line(2, "abort"));
  s.tick();
  CHECK(s.state().stage == Stage::Retracting);
  drain(s);
  CHECK(s.done());
  CHECK(s.state().cutting_time_s == doctest::Approx(5.0).epsilon(0.01));
}

TEST_CASE("socket client steers to the entry and survives a reconnect") {
  SessionOptions o = base_options();
  o.start_pose.position += Vec3(0, 10, 0);
  Session session(o);
  ServerOptions so;
  so.time_scale = 4.0;
  SessionServer server(session, so);
  std::thread th([&] { server.run(); });

  std::int64_t seq = 0;
  {
    Client c(server.port());
    REQUIRE(c.connected());
    const Json first = c.recv();
    REQUIRE(first.is_object());
    CHECK(first["type"] == "state");

    Client second(server.port());
    const Json busy = second.recv();
    REQUIRE(busy.is_object());
    CHECK(busy["code"] == "Busy");

    bool aligned = false;
    for (int k = 0; k < 400 && !aligned; ++k) {
      const Json st = c.latest_state();
      REQUIRE(st.is_object());
      const Vec3 tip(st["tip"][0], st["tip"][1], st["tip"][2]);
      if (st["aligned"].get<bool>() && (tip - o.plan.entry_pose.position).norm() < 0.5) {
        aligned = true;
        break;
      }
      const Vec3 err = o.plan.entry_pose.position - tip;
      c.send(wrench_line(++seq, 0.05 * err));
    }
    REQUIRE(aligned);
    c.send(wrench_line(++seq, Vec3::Zero()));
    c.latest_state(300);
  }
  // Disconnected: the session is paused.
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  const double paused_at = session.state().elapsed_s;
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  CHECK(session.state().elapsed_s == paused_at);

  {
    Client c(server.port());
    const Json st = c.recv();
    REQUIRE(st.is_object());
    CHECK(st["stage"] == "Admittance");
    c.send(command_line(1, "start_autonomous"));
    bool started = false;
    for (int k = 0; k < 100 && !started; ++k) {
      const Json m = c.recv();
      REQUIRE(m.is_object());
      CHECK(m["type"] != "error");
      started = m["type"] == "state" && m["stage"] == "AutonomousStraight";
    }
    CHECK(started);
  }
  server.stop();
  th.join();
}

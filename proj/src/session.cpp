#include "ssf/session.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include <spdlog/spdlog.h>

#include "ssf/error.hpp"
#include "ssf/evaluation.hpp"
#include "ssf/tracker.hpp"

namespace ssf {

Session::Session(SessionOptions opts) : opts_(std::move(opts)), phantom_(build_phantom(opts_.phantom)) {
  validate(opts_.control);
  check_plan_fits(opts_.plan, phantom_);
  if (!(opts_.state_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "state rate must be positive");
  state_every_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(1.0 / (opts_.state_rate_hz * opts_.control.dt_s) + 1e-9)));
  state_ = initial_state(opts_.start_pose);
}

std::string Session::emit(Json msg) {
  Json out{{"type", msg["type"]}, {"seq", ++seq_}};
  for (auto it = msg.begin(); it != msg.end(); ++it) {
    if (it.key() != "type") out[it.key()] = it.value();
  }
  return out.dump();
}

std::string Session::error_message(const std::string& code, const std::string& message, const Json& echo_seq) {
  return emit(Json{{"type", "error"}, {"echo_seq", echo_seq}, {"code", code}, {"message", message}});
}

std::string Session::state_message() {
  const Vec3 tip = tip_position(state_, opts_.plan);
  Json msg{{"type", "state"},
           {"version", kProtocolVersion},
           {"stage", to_string(state_.stage)},
           {"pose", to_json(state_.tool_pose)},
           {"tip", Json::array({tip.x(), tip.y(), tip.z()})},
           {"guide_mm", state_.guide_insertion_mm},
           {"elapsed_s", state_.elapsed_s},
           {"cutting_time_s", state_.cutting_time_s},
           {"rpm", state_.drill_rpm},
           {"removed", removed_since_state_},
           {"removed_total", phantom_.removed_count()},
           {"channel_mm", phantom_.channel_axis_distance(tip)},
           {"alignment_mm", alignment_error_mm(state_, opts_.plan)},
           {"alignment_deg", alignment_error_deg(state_, opts_.plan)},
           {"aligned", is_aligned(state_, opts_.plan, opts_.control)}};
  removed_since_state_ = 0;
  return emit(std::move(msg));
}

std::string Session::report_message() {
  Json msg{{"type", "report"},
           {"plan", plan_label(opts_.plan)},
           {"cutting_time_s", state_.cutting_time_s},
           {"total_time_s", state_.elapsed_s},
           {"removed_voxels", phantom_.removed_count()},
           {"removed_volume_mm3", phantom_.removed_volume_mm3()}};
  try {
    const Polyline3 path = Polyline3::from_points(cut_path_);
    TrackerOptions topt;
    topt.noise_sigma_mm = opts_.report_noise_mm;
    topt.seed = opts_.report_seed;
    topt.insertion_speed_mm_s = opts_.control.curve_speed_mm_s;
    const TrackerLog log = synthesize_tracker_log(path, topt);
    EvalConfig ecfg;
    ecfg.trial_id = "session";
    const TrialReport rep = evaluate_trial(log, opts_.plan, {}, {}, ecfg);
    msg["trial"] = to_json(rep);
  } catch (const Error& e) {
    msg["trial"] = nullptr;
    msg["trial_error"] = Json{{"code", std::string(to_string(e.code()))}, {"stage", e.stage()}, {"message", e.detail()}};
  }
  return emit(std::move(msg));
}

void Session::reset() {
  state_ = initial_state(opts_.start_pose);
  phantom_.clear_removed();
  cut_path_.clear();
  pending_.reset();
  wrench_ = Wrench{};
  wrench_age_s_ = 0.0;
  removed_since_state_ = 0;
  report_sent_ = false;
  ticks_ = 0;
}

std::vector<std::string> Session::handle_line(const std::string& line) {
  std::vector<std::string> out;
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const Json::exception&) {
    out.push_back(error_message("ParseError", "message is not valid JSON", nullptr));
    return out;
  }
  const Json echo = msg.is_object() && msg.contains("seq") ? msg["seq"] : Json(nullptr);
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    out.push_back(error_message("ParseError", "message needs a string 'type'", echo));
    return out;
  }
  if (!echo.is_number_integer()) {
    out.push_back(error_message("ParseError", "message needs an integer 'seq'", echo));
    return out;
  }
  const auto in_seq = echo.get<std::int64_t>();
  if (last_in_seq_ && in_seq <= *last_in_seq_) {
    out.push_back(error_message("InvalidArgument", "seq must increase", echo));
    return out;
  }
  last_in_seq_ = in_seq;

  const std::string type = msg["type"];
  if (type == "wrench") {
    auto read3 = [&](const char* key, Vec3& v) {
      if (!msg.contains(key) || !msg[key].is_array() || msg[key].size() != 3) return false;
      for (int i = 0; i < 3; ++i) {
        if (!msg[key][i].is_number()) return false;
        v[i] = msg[key][i].get<double>();
      }
      return all_finite(v);
    };
    Wrench w;
    if (!read3("f", w.force) || !read3("tau", w.torque)) {
      out.push_back(error_message("ParseError", "wrench needs finite 'f' and 'tau' arrays of 3 numbers", echo));
      return out;
    }
    wrench_ = w;
    wrench_age_s_ = 0.0;
  } else if (type == "command") {
    const std::string name = msg.contains("name") && msg["name"].is_string() ? msg["name"].get<std::string>() : "";
    if (name == "start_autonomous") {
      if (state_.stage != Stage::Admittance) {
        out.push_back(error_message("StageInputMismatch", "start_autonomous is only accepted during admittance", echo));
      } else if (!is_aligned(state_, opts_.plan, opts_.control)) {
        out.push_back(error_message(
            "MisalignedEntry",
            fmt::format("tip {:.3f} mm / axis {:.3f} deg from the planned entry", alignment_error_mm(state_, opts_.plan),
                        alignment_error_deg(state_, opts_.plan)),
            echo));
      } else {
        pending_ = Command::StartAutonomous;
      }
    } else if (name == "abort") {
      pending_ = Command::Abort;
    } else if (name == "reset") {
      reset();
      out.push_back(state_message());
    } else {
      out.push_back(error_message("ParseError", "unknown command '" + name + "'", echo));
    }
  } else {
    out.push_back(error_message("ParseError", "unknown message type '" + type + "'", echo));
  }
  return out;
}

std::vector<std::string> Session::tick() {
  std::vector<std::string> out;
  if (state_.stage == Stage::Done) return out;
  const double dt = opts_.control.dt_s;

  StageInput input = std::monostate{};
  if (pending_) {
    input = *pending_;
    pending_.reset();
  } else if (state_.stage == Stage::Admittance) {
    input = wrench_age_s_ <= opts_.wrench_hold_s ? wrench_ : Wrench{};
  }
  wrench_age_s_ += dt;

  const Stage before = state_.stage;
  try {
    state_ = step(state_, opts_.plan, opts_.control, input, dt);
  } catch (const Error& e) {
    out.push_back(error_message(std::string(to_string(e.code())), e.detail(), nullptr));
    return out;
  }
  if (is_cutting(before) || is_cutting(state_.stage)) {
    const Vec3 tip = tip_position(state_, opts_.plan);
    removed_since_state_ += phantom_.carve_sphere(tip, kBallNoseDiameterMm / 2.0);
    cut_path_.push_back(tip);
  }
  ++ticks_;
  if (ticks_ % state_every_ == 0 || state_.stage != before) out.push_back(state_message());
  if (state_.stage == Stage::Done && !report_sent_) {
    out.push_back(report_message());
    report_sent_ = true;
  }
  return out;
}

namespace {

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        pollfd p{fd, POLLOUT, 0};
        ::poll(&p, 1, 100);
        continue;
      }
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

SessionServer::SessionServer(Session& session, ServerOptions opts) : session_(session), opts_(std::move(opts)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoError, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(opts_.port));
  if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::InvalidArgument, "bad listen address '" + opts_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 4) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(opts_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SessionServer::~SessionServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void SessionServer::run() {
  using Clock = std::chrono::steady_clock;
  const double dt = session_.options().control.dt_s;
  const bool throttled = opts_.time_scale > 0.0;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(throttled ? dt / opts_.time_scale : 0.0));

  int client = -1;
  std::string inbox;
  auto next_tick = Clock::now();

  auto drop_client = [&] {
    if (client >= 0) ::close(client);
    client = -1;
    inbox.clear();
    spdlog::info("client disconnected; session paused at {}", to_string(session_.state().stage));
  };
  auto ship = [&](const std::vector<std::string>& msgs) {
    for (const auto& m : msgs) {
      if (client < 0) return;
      if (!send_all(client, m + "\n")) drop_client();
    }
  };

  while (!stop_) {
    if (opts_.exit_on_done && session_.report_sent()) break;
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = pollfd{listen_fd_, POLLIN, 0};
    if (client >= 0) fds[nfds++] = pollfd{client, POLLIN, 0};

    int timeout_ms = 50;
    if (client >= 0 && !session_.done()) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 50));
    }
    const int ready = ::poll(fds, nfds, timeout_ms);
    if (ready < 0 && errno != EINTR) throw Error(ErrorCode::IoError, std::string("poll: ") + std::strerror(errno));

    if (ready > 0 && (fds[0].revents & POLLIN)) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        if (client >= 0) {
          send_all(fd, "{\"type\":\"error\",\"seq\":0,\"echo_seq\":null,\"code\":\"Busy\","
                       "\"message\":\"another client is connected\"}\n");
          ::close(fd);
        } else {
          client = fd;
          const int one = 1;
          ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
          ::fcntl(client, F_SETFL, ::fcntl(client, F_GETFL) | O_NONBLOCK);
          spdlog::info("client connected; stage {}", to_string(session_.state().stage));
          next_tick = Clock::now() + period;
          session_.begin_client();
          ship({session_.state_message()});
        }
      }
    }
    if (client >= 0 && nfds > 1 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      char buf[4096];
      for (;;) {
        const ssize_t n = ::recv(client, buf, sizeof buf, 0);
        if (n > 0) {
          inbox.append(buf, static_cast<std::size_t>(n));
          continue;
        }
        if (n == 0) {
          drop_client();
        } else if (errno == EINTR) {
          continue;
        } else if (errno != EAGAIN && errno != EWOULDBLOCK) {
          drop_client();
        }
        break;
      }
      std::size_t nl;
      while (client >= 0 && (nl = inbox.find('\n')) != std::string::npos) {
        std::string line = inbox.substr(0, nl);
        inbox.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ship(session_.handle_line(line));
      }
    }

    // Advance the session while connected; without a client it stays paused.
    if (client >= 0 && !session_.done()) {
      if (!throttled) {
        ship(session_.tick());
      } else {
        int budget = 8;  // bound catch-up so incoming messages are never starved
        while (client >= 0 && Clock::now() >= next_tick && budget-- > 0 && !session_.done()) {
          ship(session_.tick());
          next_tick += period;
        }
        if (Clock::now() > next_tick + 10 * period) next_tick = Clock::now();
      }
    }
  }
  if (client >= 0) ::close(client);
}

}  // namespace ssf

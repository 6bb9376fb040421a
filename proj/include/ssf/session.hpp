#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssf/control.hpp"
#include "ssf/drill_sim.hpp"
#include "ssf/io.hpp"
#include "ssf/phantom.hpp"
#include "ssf/trajectory.hpp"

namespace ssf {

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
  TrajectoryPlan plan;
  PhantomSpec phantom;
  ControlConfig control;
  Pose start_pose;                   // tool pose at session start
  double state_rate_hz = 30.0;       // in simulated time
  double wrench_hold_s = 0.25;       // a wrench older than this counts as released
  double report_noise_mm = 0.0;      // tracker noise for the final trial report
  std::uint64_t report_seed = 42;
};

/// One interactive procedure driven by newline-delimited JSON messages.
/// Transport-free: the server feeds lines in and ships the returned lines out.
/// Every outgoing message carries the next value of a single gapless seq.
class Session {
 public:
  explicit Session(SessionOptions opts);

  /// Handles one incoming message; returns the messages to send back.
  std::vector<std::string> handle_line(const std::string& line);
  /// Advances the state machine by one control period.
  std::vector<std::string> tick();
  /// Current state as a state message (consumes a seq).
  std::string state_message();
  /// A new client starts its own incoming seq numbering.
  void begin_client() { last_in_seq_.reset(); }

  const ProcedureState& state() const { return state_; }
  const VoxelPhantom& phantom() const { return phantom_; }
  const SessionOptions& options() const { return opts_; }
  bool done() const { return state_.stage == Stage::Done; }
  bool report_sent() const { return report_sent_; }
  std::uint64_t next_seq() const { return seq_ + 1; }

 private:
  std::string emit(Json msg);
  std::string error_message(const std::string& code, const std::string& message, const Json& echo_seq);
  std::string report_message();
  void reset();

  SessionOptions opts_;
  VoxelPhantom phantom_;
  ProcedureState state_;
  std::uint64_t seq_ = 0;
  std::optional<std::int64_t> last_in_seq_;
  Wrench wrench_;
  double wrench_age_s_ = 0.0;
  std::optional<Command> pending_;
  std::size_t ticks_ = 0;
  std::size_t state_every_ = 1;
  std::size_t removed_since_state_ = 0;
  std::vector<Vec3> cut_path_;
  bool report_sent_ = false;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;              // 0 picks a free port
  double time_scale = 1.0;   // simulated seconds per wall second; <= 0 runs unthrottled
  bool exit_on_done = false;
};

/// Serves one client at a time over TCP. A single thread polls the socket
/// and advances the session at a fixed period, so message handling never
/// delays a step by more than one period. With no client connected the
/// session is paused; a reconnecting client resumes it.
class SessionServer {
 public:
  SessionServer(Session& session, ServerOptions opts);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Bound port (valid after construction).
  int port() const { return port_; }
  /// Runs until stop() or, with exit_on_done, until the report is delivered.
  void run();
  void stop() { stop_ = true; }

 private:
  Session& session_;
  ServerOptions opts_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
};

}  // namespace ssf

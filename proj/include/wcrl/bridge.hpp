#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wcrl/env.hpp"

namespace wcrl {

// Newline-delimited JSON episode protocol.
//
// Requests:  {"cmd":"reset","seed":int} | {"cmd":"step","action":int} | {"cmd":"close"}
// Responses: {"obs":{"shape":[h,w,t],"data":[0/1...]},"mask":[0/1...],"loc":[r,c],
//             "reward":float,"done":bool,"info":{...}}
//            reward and done are absent on reset. Failures are
//            {"error":code,"detail":string} and leave the episode untouched.
// Error codes: bad_request, unknown_cmd, no_episode, episode_finished,
//              masked_action, action_out_of_range, reset_failed, budget_exceeded.
nlohmann::ordered_json state_frame(const Observation& obs, const ActionMask& mask, Coord loc,
                                   const StepInfo& info);
nlohmann::ordered_json reset_frame(const ResetResult& r);
nlohmann::ordered_json step_frame(const StepResult& r);
nlohmann::ordered_json error_frame(std::string_view code, std::string_view detail);

// One episode session; owns its own copy of the environment.
class BridgeSession {
 public:
  explicit BridgeSession(const Environment& prototype) : env_(prototype) {}

  // Answers one request line with one response line (no trailing newline).
  std::string handle(std::string_view line);
  bool closed() const { return closed_; }
  const Environment& env() const { return env_; }

 private:
  Environment env_;
  bool closed_ = false;
};

// Serves a single session until close or end of input.
void serve_stream(const Environment& prototype, std::istream& in, std::ostream& out);

// Listens on 127.0.0.1:port (0 picks a free port) and serves one session per
// connection, one connection at a time. on_listening receives the bound port.
// Returns after max_sessions connections when max_sessions >= 0.
void serve_tcp(const Environment& prototype, int port, int max_sessions = -1,
               const std::function<void(int)>& on_listening = {});

class RemoteClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Defers every choice to a peer: sends the current state frame and waits for
// {"cmd":"step","action":k}. Invalid choices are answered with an error frame
// and the peer is asked again.
class RemotePolicy final : public Policy {
 public:
  RemotePolicy(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  PatternId act(const Environment& env, Rng& rng) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

}  // namespace wcrl

#include "wcrl/bridge.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

namespace wcrl {

namespace {

nlohmann::ordered_json info_json(const StepInfo& info) {
  nlohmann::ordered_json j;
  j["collapsed"] = info.collapsed_count;
  j["available"] = info.available_total;
  j["gold_reachable"] = info.gold_reachable;
  j["contradiction"] = info.contradiction;
  j["playable"] = info.playable;
  return j;
}

}  // namespace

nlohmann::ordered_json state_frame(const Observation& obs, const ActionMask& mask, Coord loc,
                                   const StepInfo& info) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json o;
  o["shape"] = {obs.height, obs.width, obs.channels};
  auto data = nlohmann::ordered_json::array();
  for (auto v : obs.data) data.push_back(static_cast<int>(v));
  o["data"] = std::move(data);
  j["obs"] = std::move(o);
  auto m = nlohmann::ordered_json::array();
  for (auto v : mask) m.push_back(static_cast<int>(v));
  j["mask"] = std::move(m);
  j["loc"] = {loc.row, loc.col};
  j["info"] = info_json(info);
  return j;
}

nlohmann::ordered_json reset_frame(const ResetResult& r) {
  auto j = state_frame(r.observation, r.mask, r.location, r.info);
  if (r.done) j["info"]["terminal"] = true;
  return j;
}

nlohmann::ordered_json step_frame(const StepResult& r) {
  nlohmann::ordered_json j = state_frame(r.observation, r.mask, r.location, r.info);
  nlohmann::ordered_json out;
  out["obs"] = std::move(j["obs"]);
  out["mask"] = std::move(j["mask"]);
  out["loc"] = std::move(j["loc"]);
  out["reward"] = r.reward;
  out["done"] = r.done;
  out["info"] = std::move(j["info"]);
  return out;
}

nlohmann::ordered_json error_frame(std::string_view code, std::string_view detail) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["detail"] = detail;
  return j;
}

std::string BridgeSession::handle(std::string_view line) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    return error_frame("bad_request", e.what()).dump();
  }
  if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) {
    return error_frame("bad_request", "expected an object with a string \"cmd\"").dump();
  }
  const std::string cmd = req["cmd"].get<std::string>();
  if (cmd == "close") {
    closed_ = true;
    return R"({"closed":true})";
  }
  if (cmd == "reset") {
    if (!req.contains("seed") || !req["seed"].is_number_integer()) {
      return error_frame("bad_request", "reset needs an integer \"seed\"").dump();
    }
    try {
      return reset_frame(env_.reset(req["seed"].get<std::uint64_t>())).dump();
    } catch (const EnvError& e) {
      return error_frame("reset_failed", e.what()).dump();
    }
  }
  if (cmd == "step") {
    if (!req.contains("action") || !req["action"].is_number_integer()) {
      return error_frame("bad_request", "step needs an integer \"action\"").dump();
    }
    const auto action = req["action"].get<long long>();
    if (!env_.started()) return error_frame("no_episode", "send reset first").dump();
    if (env_.done()) return error_frame("episode_finished", "episode already finished").dump();
    if (action < 0 || static_cast<unsigned long long>(action) >= env_.action_count()) {
      return error_frame("action_out_of_range",
                         "action must be in [0, " + std::to_string(env_.action_count()) + ")")
          .dump();
    }
    try {
      return step_frame(env_.step(static_cast<PatternId>(action))).dump();
    } catch (const EnvError& e) {
      switch (e.kind()) {
        case EnvError::Kind::MaskedActionChosen: return error_frame("masked_action", e.what()).dump();
        case EnvError::Kind::BudgetExceeded: return error_frame("budget_exceeded", e.what()).dump();
        default: return error_frame("bad_request", e.what()).dump();
      }
    }
  }
  return error_frame("unknown_cmd", "unknown command '" + cmd + "'").dump();
}

void serve_stream(const Environment& prototype, std::istream& in, std::ostream& out) {
  BridgeSession session(prototype);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
}

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int fd() const { return fd_; }

 private:
  int fd_;
};

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

void serve_connection(const Environment& prototype, int fd) {
  BridgeSession session(prototype);
  std::string buffer;
  char chunk[4096];
  while (!session.closed()) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while (!session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!send_all(fd, session.handle(line) + "\n")) return;
    }
  }
}

}  // namespace

void serve_tcp(const Environment& prototype, int port, int max_sessions,
               const std::function<void(int)>& on_listening) {
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    throw std::runtime_error(std::string("bind: ") + std::strerror(errno));
  }
  if (::listen(listener.fd(), 4) < 0) {
    throw std::runtime_error(std::string("listen: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  for (int served = 0; max_sessions < 0 || served < max_sessions; ++served) {
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) {
        --served;
        continue;
      }
      throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
    }
    Socket conn(fd);
    serve_connection(prototype, conn.fd());
  }
}

PatternId RemotePolicy::act(const Environment& env, Rng&) {
  StepInfo info;
  info.collapsed_count = env.wave().collapsed_count();
  info.available_total = env.wave().total_available();
  info.gold_reachable = env.gold_reachable();
  out_ << state_frame(env.observation(), env.mask(), env.location(), info).dump() << '\n';
  out_.flush();
  std::string line;
  while (std::getline(in_, line)) {
    if (line.empty()) continue;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      out_ << error_frame("bad_request", e.what()).dump() << '\n';
      out_.flush();
      continue;
    }
    const auto cmd = req.value("cmd", std::string());
    if (cmd == "close") throw RemoteClosed("peer closed the session");
    if (cmd != "step" || !req.contains("action") || !req["action"].is_number_integer()) {
      out_ << error_frame("bad_request", "expected {\"cmd\":\"step\",\"action\":int}").dump()
           << '\n';
      out_.flush();
      continue;
    }
    const auto action = req["action"].get<long long>();
    if (action < 0 || static_cast<unsigned long long>(action) >= env.mask().size()) {
      out_ << error_frame("action_out_of_range", "no such pattern").dump() << '\n';
    } else if (!env.mask()[static_cast<std::size_t>(action)]) {
      out_ << error_frame("masked_action", "pattern is masked out").dump() << '\n';
    } else {
      return static_cast<PatternId>(action);
    }
    out_.flush();
  }
  throw RemoteClosed("peer closed the stream");
}

}  // namespace wcrl

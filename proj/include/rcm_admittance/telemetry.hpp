#pragma once

#include "rcm_admittance/monitors.hpp"
#include "rcm_admittance/simulation.hpp"
#include "rcm_admittance/trace.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <list>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rcm {

using Json = nlohmann::json;

inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

/// 4-byte big-endian payload length followed by the UTF-8 JSON text.
inline std::string encode_frame(const std::string& payload) {
  if (payload.size() > kMaxFrameBytes) throw Error("telemetry frame too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += payload;
  return out;
}

inline std::string encode_frame(const Json& message) { return encode_frame(message.dump()); }

/// Incremental decoder for a byte stream of frames.
class FrameDecoder {
 public:
  /// Appends bytes; returns every payload completed by them. Throws Error on
  /// an oversized length prefix.
  std::vector<std::string> feed(const char* data, std::size_t size) {
    buf_.append(data, size);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (buf_.size() - pos >= 4) {
      const auto* p = reinterpret_cast<const unsigned char*>(buf_.data() + pos);
      const std::uint32_t n = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                              (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
      if (n > kMaxFrameBytes) throw Error("telemetry frame length " + std::to_string(n) + " exceeds limit");
      if (buf_.size() - pos - 4 < n) break;
      out.emplace_back(buf_, pos + 4, n);
      pos += 4 + n;
    }
    buf_.erase(0, pos);
    return out;
  }

  std::size_t pending() const { return buf_.size(); }

 private:
  std::string buf_;
};

struct Command {
  enum class Type { kWrench, kPause, kResume, kReset };
  Type type = Type::kWrench;
  Vec6 wrench = Vec6::Zero();
};

/// Inbound commands:
///   {"type":"wrench","force":[fx,fy,fz],"torque":[tx,ty,tz]}   base frame, either part optional
///   {"type":"pause"} | {"type":"resume"} | {"type":"reset"}
/// Wrenches outside `cap` are rejected.
inline Command parse_command(const std::string& payload, const WrenchCap& cap = {}) {
  Json j;
  try {
    j = Json::parse(payload);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed command: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw InputError("command needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  Command c;
  if (type == "pause") {
    c.type = Command::Type::kPause;
  } else if (type == "resume") {
    c.type = Command::Type::kResume;
  } else if (type == "reset") {
    c.type = Command::Type::kReset;
  } else if (type == "wrench") {
    c.type = Command::Type::kWrench;
    auto read3 = [&j](const char* key, int offset, Vec6& w) {
      if (!j.contains(key)) return;
      const auto& a = j[key];
      if (!a.is_array() || a.size() != 3) throw InputError(std::string("wrench '") + key + "' must be 3 numbers");
      for (int i = 0; i < 3; ++i) {
        if (!a[static_cast<std::size_t>(i)].is_number()) {
          throw InputError(std::string("wrench '") + key + "' must be 3 numbers");
        }
        w(offset + i) = a[static_cast<std::size_t>(i)].get<double>();
      }
    };
    read3("force", 0, c.wrench);
    read3("torque", 3, c.wrench);
    if (!cap.admits(c.wrench)) throw InputError("wrench exceeds the sanity cap");
  } else {
    throw InputError("unknown command type '" + type + "'");
  }
  return c;
}

inline Json command_json(const Command& c) {
  switch (c.type) {
    case Command::Type::kPause:
      return {{"type", "pause"}};
    case Command::Type::kResume:
      return {{"type", "resume"}};
    case Command::Type::kReset:
      return {{"type", "reset"}};
    case Command::Type::kWrench:
      break;
  }
  return {{"type", "wrench"},
          {"force", {c.wrench(0), c.wrench(1), c.wrench(2)}},
          {"torque", {c.wrench(3), c.wrench(4), c.wrench(5)}}};
}

inline Json vec_json(const Eigen::Ref<const VecX>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json state_message(const TraceRecord& r, const Scenario& s, double slack) {
  const Vec3 tail = r.p_t - r.n_t * s.chain.tool_length;
  return {{"type", "state"},
          {"k", r.k},
          {"t", r.t},
          {"q_d", vec_json(r.q_d)},
          {"p_t", vec_json(r.p_t)},
          {"tail", vec_json(tail)},
          {"p_c", vec_json(s.p_c)},
          {"x_c_norm", r.x_c_norm},
          {"min_distance", r.min_distance},
          {"active", r.active},
          {"F_h", vec_json(r.F_h)},
          {"F_r", vec_json(r.F_r)},
          {"D_f", vec_json(r.D_f)},
          {"E", r.E},
          {"slack", slack}};
}

/// Sent once per connection so a viewer can draw the region and tool.
inline Json scene_message(const Scenario& s) {
  Json pts = Json::array();
  for (const auto& p : s.region.points()) pts.push_back({p.x(), p.y(), p.z()});
  Json ctx = Json::array();
  for (const auto& p : s.region.context_points()) ctx.push_back({p.x(), p.y(), p.z()});
  return {{"type", "scene"},
          {"mode", to_string(s.mode)},
          {"p_c", vec_json(s.p_c)},
          {"d_c", s.region.d_c()},
          {"d_0", s.region.d_0()},
          {"tool_length", s.chain.tool_length},
          {"tool_radius", s.chain.tool_radius},
          {"dt", s.admittance.dt},
          {"points", std::move(pts)},
          {"context", std::move(ctx)}};
}

inline Json report_message(const MonitorReport& rep) {
  return {{"type", "report"}, {"report", rep.to_json(false)}};
}

/// Last commanded wrench, decaying to zero with a 100 ms half-life in
/// simulation time.
class LiveWrenchSource : public WrenchSource {
 public:
  static constexpr double kHalfLife = 0.1;

  void set(const Vec6& w, double t) {
    w_ = w;
    t_set_ = t;
  }

  Vec6 at(double t, const Mat3&) override {
    const double age = std::max(0.0, t - t_set_);
    return w_ * std::exp2(-age / kHalfLife);
  }

 private:
  Vec6 w_ = Vec6::Zero();
  double t_set_ = 0.0;
};

/// Bounded FIFO that drops the oldest entry when full.
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity = 64) : capacity_(std::max<std::size_t>(1, capacity)) {}

  void push(std::string item) {
    if (items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(std::move(item));
  }

  bool pop(std::string& out) {
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    return true;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t dropped() const { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<std::string> items_;
  std::size_t dropped_ = 0;
};

struct ListenAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 7070;
};

/// "host:port", ":port" or "port".
inline ListenAddress parse_listen_address(const std::string& s) {
  ListenAddress a;
  std::string port = s;
  if (const auto colon = s.rfind(':'); colon != std::string::npos) {
    if (colon > 0) a.host = s.substr(0, colon);
    port = s.substr(colon + 1);
  }
  if (port.empty()) throw InputError("listen address '" + s + "' has no port");
  std::uint64_t p = 0;
  if (!detail::parse_uint(port, p) || p > 65535) throw InputError("bad port in listen address '" + s + "'");
  a.port = static_cast<std::uint16_t>(p);
  in_addr probe{};
  if (inet_pton(AF_INET, a.host.c_str(), &probe) != 1) throw InputError("listen host must be an IPv4 address");
  return a;
}

/// TCP telemetry endpoint. Outbound messages go to every client through a
/// per-client drop-oldest queue; inbound commands are queued for the loop
/// to apply at tick boundaries.
class LiveServer {
 public:
  LiveServer(const ListenAddress& addr, WrenchCap cap = {}, std::size_t queue_capacity = 64)
      : cap_(cap), queue_capacity_(queue_capacity) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(addr.port);
    inet_pton(AF_INET, addr.host.c_str(), &sa.sin_addr);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0 || ::listen(fd_, 8) < 0) {
      const std::string err = std::strerror(errno);
      ::close(fd_);
      throw Error("cannot listen on " + addr.host + ":" + std::to_string(addr.port) + ": " + err);
    }
    socklen_t len = sizeof sa;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
    set_nonblocking(fd_);
    io_ = std::thread([this] { io_loop(); });
  }

  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  ~LiveServer() { stop(); }

  std::uint16_t port() const { return port_; }

  /// Message sent to each client right after it connects.
  void set_greeting(const Json& message) {
    std::lock_guard lock(mu_);
    greeting_ = encode_frame(message);
  }

  void publish(const Json& message) {
    const std::string frame = encode_frame(message);
    std::lock_guard lock(mu_);
    for (auto& c : clients_) c.out.push(frame);
  }

  std::vector<Command> poll_commands() {
    std::lock_guard lock(mu_);
    std::vector<Command> out(commands_.begin(), commands_.end());
    commands_.clear();
    return out;
  }

  std::size_t client_count() const {
    std::lock_guard lock(mu_);
    return clients_.size();
  }

  std::size_t rejected_commands() const { return rejected_.load(); }

  std::size_t dropped_messages() const {
    std::lock_guard lock(mu_);
    return dropped_ + [this] {
      std::size_t n = 0;
      for (const auto& c : clients_) n += c.out.dropped();
      return n;
    }();
  }

  /// Blocks until every queued outbound message is written or `timeout` passes.
  bool flush(std::chrono::milliseconds timeout = std::chrono::milliseconds(1000)) {
    const auto until = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      {
        std::lock_guard lock(mu_);
        bool empty = true;
        for (const auto& c : clients_) empty = empty && c.out.size() == 0 && c.partial.empty();
        if (empty) return true;
      }
      if (std::chrono::steady_clock::now() > until) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (io_.joinable()) io_.join();
    std::lock_guard lock(mu_);
    for (auto& c : clients_) ::close(c.fd);
    clients_.clear();
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  struct Client {
    int fd = -1;
    DropOldestQueue out;
    std::string partial;  // frame being written
    FrameDecoder in;
  };

  static void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

  void io_loop() {
    while (!stopping_.load()) {
      std::vector<pollfd> fds;
      {
        std::lock_guard lock(mu_);
        fds.push_back({fd_, POLLIN, 0});
        for (const auto& c : clients_) {
          short ev = POLLIN;
          if (c.out.size() || !c.partial.empty()) ev |= POLLOUT;
          fds.push_back({c.fd, ev, 0});
        }
      }
      ::poll(fds.data(), fds.size(), 5);
      if (fds[0].revents & POLLIN) accept_clients();
      std::lock_guard lock(mu_);
      for (auto it = clients_.begin(); it != clients_.end();) {
        if (!service(*it)) {
          ::close(it->fd);
          dropped_ += it->out.dropped();
          it = clients_.erase(it);
        } else {
          ++it;
        }
      }
    }
  }

  void accept_clients() {
    for (;;) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) return;
      set_nonblocking(c);
      std::lock_guard lock(mu_);
      Client client{c, DropOldestQueue(queue_capacity_), {}, {}};
      if (!greeting_.empty()) client.partial = greeting_;
      clients_.push_back(std::move(client));
    }
  }

  // Reads commands and writes pending frames; false when the peer is gone.
  bool service(Client& c) {
    char buf[4096];
    for (;;) {
      const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
      if (n == 0) return false;
      if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
        return false;
      }
      std::vector<std::string> payloads;
      try {
        payloads = c.in.feed(buf, static_cast<std::size_t>(n));
      } catch (const Error&) {
        return false;
      }
      for (const auto& p : payloads) {
        try {
          commands_.push_back(parse_command(p, cap_));
        } catch (const InputError& e) {
          ++rejected_;
          c.out.push(encode_frame(Json{{"type", "error"}, {"message", e.what()}}));
        }
      }
    }
    for (;;) {
      if (c.partial.empty() && !c.out.pop(c.partial)) return true;
      const ssize_t n = ::send(c.fd, c.partial.data(), c.partial.size(), MSG_NOSIGNAL);
      if (n < 0) return errno == EAGAIN || errno == EWOULDBLOCK;
      c.partial.erase(0, static_cast<std::size_t>(n));
      if (!c.partial.empty()) return true;
    }
  }

  WrenchCap cap_;
  std::size_t queue_capacity_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread io_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> rejected_{0};
  mutable std::mutex mu_;
  std::list<Client> clients_;
  std::deque<Command> commands_;
  std::string greeting_;
  std::size_t dropped_ = 0;
};

struct LiveOptions {
  std::size_t decimate = 4;
  bool pace = true;                   // hold ticks to wall-clock time
  std::size_t max_ticks = 0;          // 0 runs until `stop` is set
};

/// Live loop: applies queued commands at tick boundaries, steps the
/// simulator, streams decimated state and finally the report. Every record
/// goes to `sink` (the lossless trace writer).
inline Trace run_live(Simulator& sim, LiveServer& server, const std::atomic<bool>& stop,
                      const LiveOptions& opt, TraceWriter* writer = nullptr) {
  const auto& s = sim.scenario();
  Trace trace;
  trace.meta = trace_meta(s);
  trace.meta.planned_ticks = 0;
  server.set_greeting(scene_message(s));
  LiveWrenchSource source;
  bool paused = false;
  double e0 = 0.0;
  double work = 0.0;
  bool fresh = true;
  const std::size_t decimate = std::max<std::size_t>(1, opt.decimate);
  const auto dt = std::chrono::duration<double>(s.admittance.dt);
  auto origin = std::chrono::steady_clock::now();
  std::size_t paced = 0;

  auto sink = [&](const TraceRecord& r) {
    if (fresh) {
      e0 = r.E;
      work = 0.0;
      fresh = false;
    }
    const double slack = e0 + work - r.E;
    work += r.power * s.admittance.dt;
    trace.records.push_back(r);
    if (writer) writer->write(r);
    if (r.k % decimate == 0) server.publish(state_message(r, s, slack));
  };

  while (!stop.load()) {
    for (const auto& c : server.poll_commands()) {
      switch (c.type) {
        case Command::Type::kWrench:
          source.set(c.wrench, sim.profile_time());
          break;
        case Command::Type::kPause:
          paused = true;
          break;
        case Command::Type::kResume:
          if (paused) {
            origin = std::chrono::steady_clock::now();
            paced = 0;
          }
          paused = false;
          break;
        case Command::Type::kReset:
          sim.reset();
          source.set(Vec6::Zero(), sim.profile_time());
          trace.resets.push_back(trace.records.size());
          if (writer) writer->reset();
          fresh = true;
          break;
      }
    }
    if (opt.max_ticks && trace.records.size() >= opt.max_ticks) break;
    if (paused || sim.faulted()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    if (!sim.step(source, sink)) {
      trace.faults.push_back(*sim.fault());
      if (writer) writer->fault(*sim.fault());
    }
    if (opt.pace) {
      ++paced;
      std::this_thread::sleep_until(origin + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                 dt * static_cast<double>(paced)));
    }
  }
  const auto report = evaluate(trace);
  server.publish(report_message(report));
  server.flush();
  return trace;
}

}  // namespace rcm

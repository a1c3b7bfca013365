#pragma once

#include "rcm_admittance/common.hpp"
#include "rcm_admittance/potential_field.hpp"

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rcm {

struct MonitorThresholds {
  double rcm_tol = 1e-5;        // m, bound on |x_c|
  double slack_tol = 1e-3;      // J, energy-balance slack may dip this far below zero
  double residual_tol = 1e-3;   // m/s^2, constraint dynamics residual
};

/// Everything the monitors need besides the records themselves.
struct TraceMeta {
  std::string scenario = "unnamed";
  ToolMode mode = ToolMode::kTip;
  Eigen::Index dof = 7;
  double dt = 0.004;
  double alpha = 25.0;
  double beta = 25.0;
  double d_c = 0.0035;
  double d_0 = 0.0115;
  double tool_radius = 0.0;
  std::uint64_t seed = 0;
  std::size_t planned_ticks = 0;
  MonitorThresholds thresholds;

  double clearance_threshold() const { return mode == ToolMode::kTip ? d_c : d_c + tool_radius; }
  double influence_reach() const { return clearance_threshold() + d_0; }
  Eigen::Index free_coords() const { return dof - 2; }
};

/// One control tick. Velocities and wrenches are those used by the tick,
/// before the state update.
struct TraceRecord {
  std::size_t k = 0;
  double t = 0.0;
  VecX q_d;
  Eigen::Vector2d x_c = Eigen::Vector2d::Zero();
  double x_c_norm = 0.0;
  Eigen::Vector2d x_c_dot = Eigen::Vector2d::Zero();
  VecX x_f_dot;
  Vec3 p_t = Vec3::Zero();
  Vec3 n_t = Vec3::UnitZ();
  double min_distance = 0.0;
  std::size_t active = 0;
  Vec6 F_h = Vec6::Zero();
  Vec6 F_th = Vec6::Zero();
  Vec6 F_r = Vec6::Zero();
  double port_force = 0.0;           // n_t^T f_r
  Vec3 port_torque = Vec3::Zero();   // repulsion torque about the port
  VecX D_f;
  double V_total = 0.0;
  double E = 0.0;                    // 1/2 |x_f_dot|^2 + V_total
  double power = 0.0;                // x_f_dot^T Z J_t^T F_th
  double dissipation = 0.0;          // x_f_dot^T D_f x_f_dot
  double robot_port_distance = 0.0;  // port offset from the tracked robot's tool axis
};

struct FaultEvent {
  std::size_t k = 0;
  double t = 0.0;
  std::string kind;
  std::string message;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;
  std::vector<FaultEvent> faults;
  std::vector<std::size_t> resets;  // record index where the state was reset
};

namespace detail {

inline void put_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void put_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_uint(std::string_view s, std::uint64_t& v) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Column names in file order for a chain with `dof` joints.
inline std::vector<std::string> trace_columns(Eigen::Index dof) {
  std::vector<std::string> c = {"k", "t"};
  auto indexed = [&c](const std::string& stem, Eigen::Index count) {
    for (Eigen::Index i = 1; i <= count; ++i) c.push_back(stem + std::to_string(i));
  };
  indexed("q_d_", dof);
  c.insert(c.end(), {"x_c_1", "x_c_2", "x_c_norm", "x_c_dot_1", "x_c_dot_2"});
  indexed("x_f_dot_", dof - 2);
  c.insert(c.end(), {"p_t_x", "p_t_y", "p_t_z", "n_t_x", "n_t_y", "n_t_z", "min_distance", "active"});
  for (const char* w : {"F_h_", "F_th_", "F_r_"}) {
    for (const char* a : {"fx", "fy", "fz", "tx", "ty", "tz"}) c.push_back(std::string(w) + a);
  }
  c.insert(c.end(), {"port_force", "port_torque_x", "port_torque_y", "port_torque_z"});
  indexed("D_f_", dof - 2);
  c.insert(c.end(), {"V_total", "E", "power", "dissipation", "robot_port_distance"});
  return c;
}

/// Tab-separated trace. Layout:
///   # key=value           metadata, one per line
///   k<TAB>t<TAB>...        header naming every column
///   records                one per tick
///   # fault ... / # reset k=N   events, in tick order
///   # end ticks=N          footer; its absence marks a truncated file
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, const TraceMeta& meta) : out_(out), meta_(meta) {
    std::string s;
    auto kv = [&s](const char* key, const std::string& value) {
      s += "# ";
      s += key;
      s += '=';
      s += value;
      s += '\n';
    };
    auto num = [](double v) {
      std::string r;
      detail::put_double(r, v);
      return r;
    };
    kv("format", "rcm-trace 1");
    kv("scenario", meta.scenario);
    kv("mode", to_string(meta.mode));
    kv("dof", std::to_string(meta.dof));
    kv("dt", num(meta.dt));
    kv("alpha", num(meta.alpha));
    kv("beta", num(meta.beta));
    kv("d_c", num(meta.d_c));
    kv("d_0", num(meta.d_0));
    kv("tool_radius", num(meta.tool_radius));
    kv("clearance_threshold", num(meta.clearance_threshold()));
    kv("influence_reach", num(meta.influence_reach()));
    kv("rcm_tol", num(meta.thresholds.rcm_tol));
    kv("slack_tol", num(meta.thresholds.slack_tol));
    kv("residual_tol", num(meta.thresholds.residual_tol));
    kv("seed", std::to_string(meta.seed));
    kv("planned_ticks", std::to_string(meta.planned_ticks));
    const auto cols = trace_columns(meta.dof);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) s += '\t';
      s += cols[i];
    }
    s += '\n';
    out_ << s;
  }

  void write(const TraceRecord& r) {
    require_size(r.q_d.size(), meta_.dof, "trace q_d");
    require_size(r.x_f_dot.size(), meta_.free_coords(), "trace x_f_dot");
    require_size(r.D_f.size(), meta_.free_coords(), "trace D_f");
    line_.clear();
    auto d = [this](double v) {
      line_ += '\t';
      detail::put_double(line_, v);
    };
    auto vec = [&d](const auto& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) d(v(i));
    };
    detail::put_uint(line_, r.k);
    d(r.t);
    vec(r.q_d);
    vec(r.x_c);
    d(r.x_c_norm);
    vec(r.x_c_dot);
    vec(r.x_f_dot);
    vec(r.p_t);
    vec(r.n_t);
    d(r.min_distance);
    line_ += '\t';
    detail::put_uint(line_, r.active);
    vec(r.F_h);
    vec(r.F_th);
    vec(r.F_r);
    d(r.port_force);
    vec(r.port_torque);
    vec(r.D_f);
    d(r.V_total);
    d(r.E);
    d(r.power);
    d(r.dissipation);
    d(r.robot_port_distance);
    line_ += '\n';
    out_ << line_;
    ++ticks_;
  }

  void fault(const FaultEvent& f) {
    std::string s = "# fault k=" + std::to_string(f.k) + " t=";
    detail::put_double(s, f.t);
    s += " kind=" + f.kind + " message=";
    for (char c : f.message) s += (c == '\n' ? ' ' : c);
    out_ << s << '\n';
  }

  void reset() { out_ << "# reset k=" << ticks_ << '\n'; }

  void finish() {
    out_ << "# end ticks=" << ticks_ << '\n';
    out_.flush();
  }

  std::size_t ticks() const { return ticks_; }

 private:
  std::ostream& out_;
  TraceMeta meta_;
  std::string line_;
  std::size_t ticks_ = 0;
};

/// Writes a complete in-memory trace.
inline void write_trace(std::ostream& out, const Trace& trace) {
  TraceWriter w(out, trace.meta);
  std::size_t next_reset = 0;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    while (next_reset < trace.resets.size() && trace.resets[next_reset] == i) {
      w.reset();
      ++next_reset;
    }
    w.write(trace.records[i]);
  }
  for (const auto& f : trace.faults) w.fault(f);
  w.finish();
}

/// Parses a trace written by TraceWriter. Malformed or truncated input raises
/// InputError with the offending line.
inline Trace read_trace(std::istream& in, const std::string& source = {}) {
  Trace trace;
  auto& meta = trace.meta;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  bool ended = false;
  std::vector<std::string> columns;

  auto fail = [&](const std::string& msg, std::size_t at) -> void { throw InputError(msg, at, source); };

  auto meta_value = [&](const char* key) -> const std::pair<std::string, std::size_t>& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(std::string("trace metadata is missing '") + key + "'", lineno);
    return it->second;
  };
  auto meta_double = [&](const char* key) {
    const auto& [text, at] = meta_value(key);
    double v = 0.0;
    if (!detail::parse_double(text, v)) fail(std::string("bad number for '") + key + "'", at);
    return v;
  };
  auto meta_uint = [&](const char* key) {
    const auto& [text, at] = meta_value(key);
    std::uint64_t v = 0;
    if (!detail::parse_uint(text, v)) fail(std::string("bad integer for '") + key + "'", at);
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (ended) fail("content after end marker", lineno);
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      if (!header_seen) {
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail("malformed metadata line", lineno);
        kv[body.substr(0, eq)] = {body.substr(eq + 1), lineno};
        continue;
      }
      std::istringstream ss(body);
      std::string word;
      ss >> word;
      if (word == "end") {
        std::string tok;
        ss >> tok;
        std::uint64_t n = 0;
        if (tok.rfind("ticks=", 0) != 0 || !detail::parse_uint(tok.substr(6), n)) {
          fail("malformed end marker", lineno);
        }
        if (n != trace.records.size()) {
          fail("end marker says " + std::to_string(n) + " ticks, found " +
                   std::to_string(trace.records.size()), lineno);
        }
        ended = true;
      } else if (word == "reset") {
        trace.resets.push_back(trace.records.size());
      } else if (word == "fault") {
        FaultEvent f;
        const auto msg_pos = body.find(" message=");
        std::istringstream fs(body.substr(6, msg_pos == std::string::npos ? std::string::npos : msg_pos - 6));
        std::string tok;
        while (fs >> tok) {
          const auto eq = tok.find('=');
          if (eq == std::string::npos) fail("malformed fault line", lineno);
          const auto key = tok.substr(0, eq);
          const auto val = tok.substr(eq + 1);
          std::uint64_t u = 0;
          if (key == "k" && detail::parse_uint(val, u)) f.k = u;
          else if (key == "t" && detail::parse_double(val, f.t)) {}
          else if (key == "kind") f.kind = val;
          else fail("malformed fault field '" + tok + "'", lineno);
        }
        if (msg_pos != std::string::npos) f.message = body.substr(msg_pos + 9);
        trace.faults.push_back(f);
      } else {
        fail("unexpected comment in trace body", lineno);
      }
      continue;
    }
    if (!header_seen) {
      const auto fmt = meta_value("format").first;
      if (fmt != "rcm-trace 1") fail("unsupported trace format '" + fmt + "'", meta_value("format").second);
      meta.scenario = meta_value("scenario").first;
      try {
        meta.mode = parse_tool_mode(meta_value("mode").first);
      } catch (const InputError& e) {
        fail(e.detail(), meta_value("mode").second);
      }
      meta.dof = static_cast<Eigen::Index>(meta_uint("dof"));
      if (meta.dof < 6) fail("trace dof must be >= 6", meta_value("dof").second);
      meta.dt = meta_double("dt");
      meta.alpha = meta_double("alpha");
      meta.beta = meta_double("beta");
      meta.d_c = meta_double("d_c");
      meta.d_0 = meta_double("d_0");
      meta.tool_radius = meta_double("tool_radius");
      meta.thresholds.rcm_tol = meta_double("rcm_tol");
      meta.thresholds.slack_tol = meta_double("slack_tol");
      meta.thresholds.residual_tol = meta_double("residual_tol");
      meta.seed = meta_uint("seed");
      meta.planned_ticks = meta_uint("planned_ticks");
      columns = trace_columns(meta.dof);
      const auto got = detail::split_tabs(line);
      bool same = got.size() == columns.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i] == columns[i];
      if (!same) fail("trace header does not match the expected columns", lineno);
      header_seen = true;
      continue;
    }
    const auto f = detail::split_tabs(line);
    if (f.size() != columns.size()) {
      fail("expected " + std::to_string(columns.size()) + " fields, got " + std::to_string(f.size()), lineno);
    }
    std::size_t col = 0;
    auto next = [&]() {
      double v = 0.0;
      if (!detail::parse_double(f[col], v)) {
        fail("bad value '" + std::string(f[col]) + "' in column " + columns[col], lineno);
      }
      ++col;
      return v;
    };
    auto next_uint = [&]() {
      std::uint64_t v = 0;
      if (!detail::parse_uint(f[col], v)) {
        fail("bad value '" + std::string(f[col]) + "' in column " + columns[col], lineno);
      }
      ++col;
      return v;
    };
    auto fill = [&](auto& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = next();
    };
    TraceRecord r;
    r.q_d.resize(meta.dof);
    r.x_f_dot.resize(meta.free_coords());
    r.D_f.resize(meta.free_coords());
    r.k = next_uint();
    r.t = next();
    fill(r.q_d);
    fill(r.x_c);
    r.x_c_norm = next();
    fill(r.x_c_dot);
    fill(r.x_f_dot);
    fill(r.p_t);
    fill(r.n_t);
    r.min_distance = next();
    r.active = next_uint();
    fill(r.F_h);
    fill(r.F_th);
    fill(r.F_r);
    r.port_force = next();
    fill(r.port_torque);
    fill(r.D_f);
    r.V_total = next();
    r.E = next();
    r.power = next();
    r.dissipation = next();
    r.robot_port_distance = next();
    if (r.k != trace.records.size()) fail("tick index out of sequence", lineno);
    trace.records.push_back(std::move(r));
  }
  if (!header_seen) fail("trace has no header row", lineno);
  if (!ended) fail("trace is truncated (no end marker)", lineno);
  return trace;
}

}  // namespace rcm

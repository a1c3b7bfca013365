#pragma once

#include "rcm_admittance/admittance.hpp"
#include "rcm_admittance/config.hpp"
#include "rcm_admittance/constraint_geometry.hpp"
#include "rcm_admittance/force_profile.hpp"
#include "rcm_admittance/monitors.hpp"
#include "rcm_admittance/potential_field.hpp"
#include "rcm_admittance/trace.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace rcm {

/// Human wrench at the end-effector, base-frame components, sampled at tick
/// time t. `r_t` is the current tool orientation.
class WrenchSource {
 public:
  virtual ~WrenchSource() = default;
  virtual Vec6 at(double t, const Mat3& r_t) = 0;
};

class ProfileSource : public WrenchSource {
 public:
  ProfileSource(ForceProfile profile, WrenchFrame frame) : profile_(std::move(profile)), frame_(frame) {}
  Vec6 at(double t, const Mat3& r_t) override { return wrench_in_base(profile_.at(t), r_t, frame_); }

 private:
  ForceProfile profile_;
  WrenchFrame frame_;
};

/// Everything a run needs, resolved and validated.
struct Scenario {
  std::string name;
  KinematicChain chain;
  AdmittanceConfig admittance;
  Vec3 p_c = Vec3::Zero();
  ForbiddenRegion region;
  ForceProfile profile;
  WrenchFrame frame = WrenchFrame::kBase;
  ToolMode mode = ToolMode::kTip;
  double duration = 0.0;
  VecX q0;
  VecX q_dot0;
  double alignment_tol = 2e-3;
  std::uint64_t seed = 0;
  std::optional<double> joint_lag_tau;
  MonitorThresholds thresholds;

  std::size_t ticks() const { return static_cast<std::size_t>(std::llround(duration / admittance.dt)); }
};

inline Scenario build_scenario(const Config& cfg) {
  Scenario s;
  s.name = cfg.scenario.name;
  s.chain = cfg.chain;
  s.chain.validate();
  s.admittance = cfg.admittance();
  s.p_c = cfg.p_c;
  s.seed = cfg.scenario.seed;
  s.region = build_region(cfg.region, s.seed);
  s.profile = build_force_profile(cfg.scenario.force, cfg.scenario.cap);
  s.frame = cfg.scenario.force.frame;
  s.mode = cfg.scenario.mode;
  s.duration = cfg.scenario.duration;
  s.q0 = cfg.q0();
  if (s.q0.size() != s.chain.dof()) {
    throw InputError("scenario.q0_deg has " + std::to_string(s.q0.size()) + " entries, chain has " +
                     std::to_string(s.chain.dof()) + " joints");
  }
  s.q_dot0 = cfg.scenario.q_dot0.value_or(VecX::Zero(s.chain.dof()));
  if (s.q_dot0.size() != s.chain.dof()) throw InputError("scenario.q_dot0_deg_s has the wrong length");
  s.alignment_tol = cfg.scenario.alignment_tol;
  s.joint_lag_tau = cfg.scenario.joint_lag_tau;
  s.thresholds = cfg.scenario.thresholds;
  return s;
}

inline TraceMeta trace_meta(const Scenario& s) {
  TraceMeta m;
  m.scenario = s.name;
  m.mode = s.mode;
  m.dof = s.chain.dof();
  m.dt = s.admittance.dt;
  m.alpha = s.admittance.alpha;
  m.beta = s.admittance.beta;
  m.d_c = s.region.d_c();
  m.d_0 = s.region.d_0();
  m.tool_radius = s.chain.tool_radius;
  m.seed = s.seed;
  m.planned_ticks = s.ticks();
  m.thresholds = s.thresholds;
  return m;
}

/// Start-of-run checks shared by `check` and `run`.
struct StartCheck {
  double x_c_norm = 0.0;
  double clearance = 0.0;
  double clearance_threshold = 0.0;
  std::size_t active = 0;
};

inline StartCheck check_start(const Scenario& s) {
  if (!s.chain.within_limits(s.q0)) throw InputError("scenario.q0_deg is outside the joint limits");
  StartCheck out;
  RcmFrame frame;
  try {
    frame = build_rcm_frame(s.chain, s.q0, s.p_c, s.admittance.W);
  } catch (const SingularityError& e) {
    throw InputError(std::string("initial configuration is singular: ") + e.what());
  }
  out.x_c_norm = frame.x_c.norm();
  if (out.x_c_norm > s.alignment_tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "initial tool axis misses the port by %.3f mm (alignment tolerance %.3f mm)",
                  out.x_c_norm * 1e3, s.alignment_tol * 1e3);
    throw InputError(buf);
  }
  const auto rep = repulsion(s.mode, frame.pose, s.chain, s.region, BarrierPolicy::kClamp);
  out.clearance = rep.min_distance;
  out.clearance_threshold = clearance_threshold(s.mode, s.region, s.chain.tool_radius);
  out.active = rep.active_count;
  if (!(out.clearance > out.clearance_threshold)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "initial pose touches the forbidden region (clearance %.3f mm <= %.3f mm)",
                  out.clearance * 1e3, out.clearance_threshold * 1e3);
    throw InputError(buf);
  }
  return out;
}

/// Closed loop at the control rate with the robot tracking q_d perfectly, or
/// through an optional first-order lag that only affects the logged
/// robot-side port distance.
class Simulator {
 public:
  using Sink = std::function<void(const TraceRecord&)>;

  explicit Simulator(Scenario scenario) : s_(std::move(scenario)) {
    check_start(s_);
    reset_state();
  }

  const Scenario& scenario() const { return s_; }
  const AdmittanceState& state() const { return state_; }
  const VecX& robot_q() const { return q_robot_; }
  std::size_t tick() const { return k_; }
  double time() const { return static_cast<double>(k_) * s_.admittance.dt; }
  /// Time since the last reset, the clock wrench sources are sampled on.
  double profile_time() const { return time() - t_offset_; }
  bool faulted() const { return fault_.has_value(); }
  const std::optional<FaultEvent>& fault() const { return fault_; }

  /// Back to q0 at rest. Tick count keeps running.
  void reset() {
    reset_state();
    fault_.reset();
    t_offset_ = time();
  }

  /// One tick with the wrench from `source`; the profile time restarts at
  /// every reset. Returns false and freezes the reference on a fault.
  bool step(WrenchSource& source, const Sink& sink) {
    if (fault_) return false;
    const double t = time();
    try {
      const RcmFrame frame = build_rcm_frame(s_.chain, state_.q_d, s_.p_c, s_.admittance.W, state_.prev_G);
      TraceRecord r;
      r.k = k_;
      r.t = t;
      r.F_h = source.at(profile_time(), frame.pose.R_t);
      if (!r.F_h.allFinite()) throw Error("non-finite human wrench");
      r.F_th = transform_human_wrench(r.F_h, frame.pose);
      const auto rep = repulsion(s_.mode, frame.pose, s_.chain, s_.region, BarrierPolicy::kThrow);
      const auto res = admittance_step(state_, frame, r.F_th, rep.F_r, s_.admittance);
      const auto& d = res.diag;

      r.q_d = state_.q_d;
      r.x_c = d.x_c;
      r.x_c_norm = d.x_c.norm();
      r.x_c_dot = d.x_c_dot;
      r.x_f_dot = d.x_f_dot;
      r.p_t = frame.pose.p_t;
      r.n_t = frame.pose.n_t();
      r.min_distance = rep.min_distance;
      r.active = rep.active_count;
      r.F_r = rep.F_r;
      const Eigen::Vector4d port = frame.Z_x * rep.F_r;
      r.port_force = port(0);
      r.port_torque = port.tail<3>();
      r.D_f = d.D_f;
      r.V_total = rep.V_total;
      r.E = 0.5 * d.x_f_dot.squaredNorm() + rep.V_total;
      r.power = d.x_f_dot.dot(d.filtered_human);
      r.dissipation = d.x_f_dot.dot(d.D_f.cwiseProduct(d.x_f_dot));
      r.robot_port_distance = robot_port_distance();

      if (!s_.chain.within_limits(res.next.q_d)) {
        sink(r);
        advance_robot();
        ++k_;
        return stop("joint_limit", "reference left the joint limits");
      }
      state_ = res.next;
      advance_robot();
      ++k_;
      sink(r);
      return true;
    } catch (const SingularityError& e) {
      return stop("singularity", e.what());
    } catch (const ConstraintViolation& e) {
      return stop("constraint_violation", e.what());
    } catch (const Error& e) {
      return stop("numerical", e.what());
    }
  }

 private:
  void reset_state() {
    state_ = AdmittanceState{};
    state_.q_d = s_.q0;
    state_.q_d_dot = s_.q_dot0;
    q_robot_ = s_.q0;
  }

  double robot_port_distance() const {
    const ToolPose pose = forward_kinematics(s_.chain, q_robot_);
    const Vec3 d = pose.p_t - s_.p_c;
    return (d - pose.n_t() * pose.n_t().dot(d)).norm();
  }

  void advance_robot() {
    if (!s_.joint_lag_tau) {
      q_robot_ = state_.q_d;
      return;
    }
    const double a = 1.0 - std::exp(-s_.admittance.dt / *s_.joint_lag_tau);
    q_robot_ += a * (state_.q_d - q_robot_);
  }

  bool stop(const std::string& kind, const std::string& message) {
    fault_ = FaultEvent{k_, time(), kind, message};
    state_.q_d_dot.setZero();
    return false;
  }

  Scenario s_;
  AdmittanceState state_;
  VecX q_robot_;
  std::size_t k_ = 0;
  double t_offset_ = 0.0;
  std::optional<FaultEvent> fault_;
};

struct RunResult {
  Trace trace;
  MonitorReport report;
};

/// Batch run: exactly scenario.ticks() ticks unless a fault stops it early.
/// `sink` also sees every record, e.g. a streaming trace writer.
inline RunResult run_scenario(const Scenario& scenario, const Simulator::Sink& sink = {}) {
  Simulator sim(scenario);
  ProfileSource source(scenario.profile, scenario.frame);
  RunResult out;
  out.trace.meta = trace_meta(scenario);
  const std::size_t n = scenario.ticks();
  out.trace.records.reserve(n);
  auto collect = [&](const TraceRecord& r) {
    out.trace.records.push_back(r);
    if (sink) sink(r);
  };
  for (std::size_t k = 0; k < n; ++k) {
    if (!sim.step(source, collect)) break;
  }
  if (sim.fault()) out.trace.faults.push_back(*sim.fault());
  out.report = evaluate(out.trace);
  return out;
}

}  // namespace rcm

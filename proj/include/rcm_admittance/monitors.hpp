#pragma once

#include "rcm_admittance/trace.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rcm {

struct Criterion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
  std::string relation;  // how value is compared with limit
};

/// Monitor outcome. Derived from a trace alone, so a replayed trace
/// reproduces the live report exactly.
struct MonitorReport {
  std::string scenario;
  std::string mode;
  std::size_t ticks = 0;
  double duration = 0.0;
  double max_x_c_norm = 0.0;
  double max_robot_port_distance = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  double clearance_threshold = 0.0;
  double influence_reach = 0.0;
  std::optional<double> onset_distance;  // clearance at the first tick with active points
  std::size_t onset_mismatches = 0;      // ticks where activity disagrees with clearance
  std::vector<double> slack;
  double min_slack = 0.0;
  double max_balance_error = 0.0;  // |slack - dissipated energy|
  double max_constraint_residual = 0.0;
  std::vector<FaultEvent> faults;
  std::vector<Criterion> criteria;

  bool pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
  }

  const Criterion* criterion(const std::string& name) const {
    for (const auto& c : criteria) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  nlohmann::ordered_json to_json(bool with_series = true) const {
    nlohmann::ordered_json j;
    j["scenario"] = scenario;
    j["mode"] = mode;
    j["ticks"] = ticks;
    j["duration"] = duration;
    j["pass"] = pass();
    j["max_x_c_norm"] = max_x_c_norm;
    j["max_robot_port_distance"] = max_robot_port_distance;
    j["min_clearance"] = std::isfinite(min_clearance) ? nlohmann::ordered_json(min_clearance) : nullptr;
    j["clearance_threshold"] = clearance_threshold;
    j["influence_reach"] = influence_reach;
    j["onset_distance"] = onset_distance ? nlohmann::ordered_json(*onset_distance) : nullptr;
    j["onset_mismatches"] = onset_mismatches;
    j["min_slack"] = min_slack;
    j["max_balance_error"] = max_balance_error;
    j["max_constraint_residual"] = max_constraint_residual;
    auto& cs = j["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : criteria) {
      cs.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"limit", c.limit},
                    {"relation", c.relation}});
    }
    auto& fs = j["faults"] = nlohmann::ordered_json::array();
    for (const auto& f : faults) {
      fs.push_back({{"k", f.k}, {"t", f.t}, {"kind", f.kind}, {"message", f.message}});
    }
    if (with_series) j["slack"] = slack;
    return j;
  }
};

/// Energy-balance slack per tick:
///   slack_k = E_0 + sum_{j<k} power_j dt - E_k
/// with E = 1/2 |x_f_dot|^2 + V_total. Passivity requires slack_k >= 0 up to
/// integration error. The sums restart at every reset.
inline std::vector<double> passivity_monitor(const Trace& trace) {
  std::vector<double> slack(trace.records.size(), 0.0);
  const double dt = trace.meta.dt;
  double e0 = 0.0;
  double work = 0.0;
  std::size_t next_reset = 0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    bool restart = k == 0;
    while (next_reset < trace.resets.size() && trace.resets[next_reset] <= k) {
      restart = restart || trace.resets[next_reset] == k;
      ++next_reset;
    }
    if (restart) {
      e0 = r.E;
      work = 0.0;
    }
    slack[k] = e0 + work - r.E;
    work += r.power * dt;
  }
  return slack;
}

namespace detail {

inline bool is_reset(const Trace& trace, std::size_t k) {
  return std::find(trace.resets.begin(), trace.resets.end(), k) != trace.resets.end();
}

}  // namespace detail

/// Recomputes every monitor from the trace. `override_thresholds` replaces
/// the limits recorded in the trace.
inline MonitorReport evaluate(const Trace& trace,
                              const std::optional<MonitorThresholds>& override_thresholds = {}) {
  const auto& meta = trace.meta;
  const MonitorThresholds th = override_thresholds.value_or(meta.thresholds);
  MonitorReport rep;
  rep.scenario = meta.scenario;
  rep.mode = to_string(meta.mode);
  rep.ticks = trace.records.size();
  rep.duration = static_cast<double>(rep.ticks) * meta.dt;
  rep.clearance_threshold = meta.clearance_threshold();
  rep.influence_reach = meta.influence_reach();
  rep.faults = trace.faults;

  const double reach = rep.influence_reach;
  double dissipated = 0.0;
  rep.slack = passivity_monitor(trace);
  rep.min_slack = rep.slack.empty() ? 0.0 : *std::min_element(rep.slack.begin(), rep.slack.end());
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    if (k == 0 || detail::is_reset(trace, k)) dissipated = 0.0;
    rep.max_balance_error = std::max(rep.max_balance_error, std::abs(rep.slack[k] - dissipated));
    dissipated += r.dissipation * meta.dt;

    rep.max_x_c_norm = std::max(rep.max_x_c_norm, r.x_c_norm);
    rep.max_robot_port_distance = std::max(rep.max_robot_port_distance, r.robot_port_distance);
    rep.min_clearance = std::min(rep.min_clearance, r.min_distance);
    const bool active = r.active > 0;
    if (active && !rep.onset_distance) rep.onset_distance = r.min_distance;
    if (active != (r.min_distance < reach)) ++rep.onset_mismatches;

    // x_c_ddot + 2 alpha x_c_dot + beta^2 x_c, with x_c_ddot from the next tick.
    if (k + 1 < trace.records.size() && !detail::is_reset(trace, k + 1)) {
      const auto& n = trace.records[k + 1];
      const Eigen::Vector2d res = (n.x_c_dot - r.x_c_dot) / meta.dt + 2.0 * meta.alpha * r.x_c_dot +
                                  meta.beta * meta.beta * r.x_c;
      rep.max_constraint_residual = std::max(rep.max_constraint_residual, res.norm());
    }
  }

  auto add = [&rep](std::string name, bool pass, double value, double limit, std::string rel) {
    rep.criteria.push_back({std::move(name), pass, value, limit, std::move(rel)});
  };
  add("rcm", rep.max_x_c_norm <= th.rcm_tol, rep.max_x_c_norm, th.rcm_tol, "<=");
  const double clearance = rep.ticks ? rep.min_clearance : std::numeric_limits<double>::infinity();
  add("clearance", clearance > rep.clearance_threshold,
      std::isfinite(clearance) ? clearance : 0.0, rep.clearance_threshold, ">");
  add("influence_onset", rep.onset_mismatches == 0, static_cast<double>(rep.onset_mismatches), 0.0, "==");
  add("passivity", rep.min_slack >= -th.slack_tol, rep.min_slack, -th.slack_tol, ">=");
  add("constraint_dynamics", rep.max_constraint_residual <= th.residual_tol, rep.max_constraint_residual,
      th.residual_tol, "<=");
  add("faults", rep.faults.empty(), static_cast<double>(rep.faults.size()), 0.0, "==");
  if (meta.planned_ticks > 0) {
    add("complete", rep.ticks == meta.planned_ticks, static_cast<double>(rep.ticks),
        static_cast<double>(meta.planned_ticks), "==");
  }
  return rep;
}

inline MonitorReport replay(std::istream& in, const std::string& source = {},
                            const std::optional<MonitorThresholds>& override_thresholds = {}) {
  return evaluate(read_trace(in, source), override_thresholds);
}

}  // namespace rcm

// rcmsim: validate configurations, run scenarios, replay traces.
//
// Exit codes: 0 pass, 2 input error, 3 fault, 4 monitor failure.

#include "rcm_admittance/config.hpp"
#include "rcm_admittance/monitors.hpp"
#include "rcm_admittance/plot_data.hpp"
#include "rcm_admittance/simulation.hpp"
#include "rcm_admittance/telemetry.hpp"
#include "rcm_admittance/trace.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit { kPass = 0, kInput = 2, kFault = 3, kMonitor = 4 };

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Options {
  std::string config;
  std::string scenario;
  std::string out = "out";
  std::string mode;
  std::optional<std::string> live;
  std::size_t decimate = 4;
  std::optional<double> rcm_tol;
  std::optional<std::uint64_t> seed;
  std::string trace;
  bool quiet = false;
};

rcm::Config load(const Options& o) {
  auto cfg = rcm::load_config(o.config, o.scenario);
  if (!o.mode.empty()) cfg.scenario.mode = rcm::parse_tool_mode(o.mode);
  if (o.seed) cfg.scenario.seed = *o.seed;
  if (o.rcm_tol) cfg.scenario.thresholds.rcm_tol = *o.rcm_tol;
  return cfg;
}

int exit_for(const rcm::MonitorReport& rep) {
  if (!rep.faults.empty()) return kFault;
  return rep.pass() ? kPass : kMonitor;
}

void print_summary(const rcm::MonitorReport& rep) {
  for (const auto& c : rep.criteria) {
    std::printf("%-4s %-20s %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                c.relation.c_str(), c.limit);
  }
  for (const auto& f : rep.faults) {
    std::printf("fault at t=%.3f s (tick %zu): %s: %s\n", f.t, f.k, f.kind.c_str(), f.message.c_str());
  }
}

int cmd_check(const Options& o) {
  const auto cfg = load(o);
  const auto scenario = rcm::build_scenario(cfg);
  const auto start = rcm::check_start(scenario);
  const auto& adm = scenario.admittance;
  const auto& region = scenario.region;
  const Eigen::Vector3d lo = region.index().bounds_min();
  const Eigen::Vector3d hi = region.index().bounds_max();
  std::printf("scenario        %s (%s mode, %.3f s, %zu ticks)\n", scenario.name.c_str(),
              rcm::to_string(scenario.mode).c_str(), scenario.duration, scenario.ticks());
  std::printf("chain           %ld joints, tool %.4f m x %.4f m\n", static_cast<long>(scenario.chain.dof()),
              scenario.chain.tool_length, scenario.chain.tool_radius);
  std::printf("alignment       |x_c(0)| = %.3e m (tolerance %.3e m) ok\n", start.x_c_norm, scenario.alignment_tol);
  std::printf("gains           dt * max D_f = %.4f (< 2 required) ok\n", adm.dt * adm.damping.max_damping());
  std::printf("region          %zu points, %zu context, d_c = %.4f m, d_0 = %.4f m\n", region.size(),
              region.context_points().size(), region.d_c(), region.d_0());
  std::printf("coverage        [%.4f, %.4f] x [%.4f, %.4f] x [%.4f, %.4f] m\n", lo.x(), hi.x(), lo.y(), hi.y(),
              lo.z(), hi.z());
  std::printf("clearance       %.4f m at start (threshold %.4f m, influence from %.4f m)\n", start.clearance,
              start.clearance_threshold, start.clearance_threshold + region.d_0());
  std::printf("profile         %zu samples, %s frame\n", scenario.profile.samples().size(),
              scenario.frame == rcm::WrenchFrame::kTool ? "tool" : "base");
  return kPass;
}

void write_artifacts(const rcm::Trace& trace, const rcm::MonitorReport& rep, const std::filesystem::path& dir) {
  std::ofstream rj(dir / "report.json");
  rj << rep.to_json().dump(2) << '\n';
  rcm::write_plot_files(trace, dir);
}

int cmd_run(const Options& o) {
  const auto cfg = load(o);
  const auto scenario = rcm::build_scenario(cfg);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  std::ofstream trace_out(dir / "trace.tsv");
  if (!trace_out) throw rcm::Error("cannot write " + (dir / "trace.tsv").string());

  if (o.live) {
    rcm::Simulator sim(scenario);
    auto meta = rcm::trace_meta(scenario);
    meta.planned_ticks = 0;
    rcm::TraceWriter writer(trace_out, meta);
    rcm::LiveServer server(rcm::parse_listen_address(o.live->empty() ? "127.0.0.1:7070" : *o.live),
                           cfg.scenario.cap);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("live: listening on port %u, Ctrl-C to stop\n", static_cast<unsigned>(server.port()));
    std::fflush(stdout);
    rcm::LiveOptions opt;
    opt.decimate = o.decimate;
    const auto trace = rcm::run_live(sim, server, g_stop, opt, &writer);
    writer.finish();
    const auto rep = rcm::evaluate(trace);
    write_artifacts(trace, rep, dir);
    if (!o.quiet) print_summary(rep);
    return exit_for(rep);
  }

  const auto meta = rcm::trace_meta(scenario);
  rcm::TraceWriter writer(trace_out, meta);
  auto result = rcm::run_scenario(scenario, [&writer](const rcm::TraceRecord& r) { writer.write(r); });
  for (const auto& f : result.trace.faults) writer.fault(f);
  writer.finish();
  write_artifacts(result.trace, result.report, dir);
  if (!o.quiet) print_summary(result.report);
  return exit_for(result.report);
}

int cmd_replay(const Options& o) {
  std::ifstream in(o.trace);
  if (!in) throw rcm::InputError("cannot open trace '" + o.trace + "'");
  const auto trace = rcm::read_trace(in, o.trace);
  std::optional<rcm::MonitorThresholds> th;
  if (o.rcm_tol) {
    th = trace.meta.thresholds;
    th->rcm_tol = *o.rcm_tol;
  }
  const auto rep = rcm::evaluate(trace, th);
  if (!o.quiet) std::cout << rep.to_json(false).dump(2) << '\n';
  return exit_for(rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admittance control with a remote center of motion and forbidden regions"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "configuration file (YAML)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--scenario", o.scenario, "scenario overlay merged over the configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--mode", o.mode, "tool model override")->check(CLI::IsMember({"tip", "capsule"}));
    sub->add_option("--seed", o.seed, "seed for randomized fixtures");
    sub->add_option("--rcm-tol", o.rcm_tol, "RCM error bound in m")->check(CLI::PositiveNumber);
  };

  auto* check = app.add_subcommand("check", "validate a configuration and report start conditions");
  common(check, true);

  auto* run = app.add_subcommand("run", "run a scenario and write trace, report and plot data");
  common(run, true);
  run->add_option("--out", o.out, "output directory")->capture_default_str();
  run->add_option("--live", o.live, "serve telemetry on [host:]port until interrupted")
      ->expected(0, 1)
      ->default_str("127.0.0.1:7070");
  run->add_option("--decimate", o.decimate, "publish every Nth tick in live mode")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
      ->capture_default_str();
  run->add_flag("--quiet", o.quiet, "no summary on stdout");

  auto* rep = app.add_subcommand("replay", "recompute the monitor report from a trace");
  rep->add_option("trace", o.trace, "trace file")->required();
  rep->add_option("--rcm-tol", o.rcm_tol, "RCM error bound in m")->check(CLI::PositiveNumber);
  rep->add_flag("--quiet", o.quiet, "no report on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInput;
  }

  try {
    if (*check) return cmd_check(o);
    if (*run) return cmd_run(o);
    return cmd_replay(o);
  } catch (const rcm::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  } catch (const rcm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFault;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  }
}

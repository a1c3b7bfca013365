#include "rcm_admittance/config.hpp"
#include "rcm_admittance/monitors.hpp"
#include "rcm_admittance/plot_data.hpp"
#include "rcm_admittance/simulation.hpp"
#include "rcm_admittance/trace.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace rcm {
namespace {

Scenario scenario(const std::string& overlay = {}) {
  return build_scenario(load_config(test::source_path("scenarios/default.yaml"),
                                    overlay.empty() ? std::string() : test::source_path("scenarios/" + overlay)));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string text_of(const Trace& t) {
  std::ostringstream ss;
  write_trace(ss, t);
  return ss.str();
}

const RunResult& press_run() {
  static const RunResult r = [] {
    auto s = scenario("tip_press.yaml");
    s.duration = 10.0;
    return run_scenario(s);
  }();
  return r;
}

// Coasting start: free-space velocity only, about the peak speed under guidance.
Scenario coasting() {
  auto s = scenario();
  const auto f = build_rcm_frame(s.chain, s.q0, s.p_c, s.admittance.W);
  VecX xf(5);
  xf << 0.004, 0.06, -0.04, 0.02, 0.08;
  s.q_dot0 = f.Z.transpose() * xf;
  s.duration = 2.0;
  return s;
}

TEST(Trace, HeaderMatchesGolden) {
  auto s = scenario();
  std::ostringstream ss;
  TraceWriter w(ss, trace_meta(s));
  EXPECT_EQ(ss.str(), slurp(test::source_path("tests/golden/trace_7dof.header")));
}

TEST(Trace, RoundTripIsExact) {
  const auto& r = press_run();
  const std::string text = text_of(r.trace);
  std::istringstream in(text);
  const Trace back = read_trace(in);
  ASSERT_EQ(back.records.size(), r.trace.records.size());
  EXPECT_EQ(text_of(back), text);
  for (std::size_t k = 0; k < back.records.size(); k += 97) {
    EXPECT_EQ(back.records[k].q_d, r.trace.records[k].q_d);
    EXPECT_EQ(back.records[k].E, r.trace.records[k].E);
  }
}

TEST(Trace, TruncatedFileRejected) {
  std::string text = text_of(press_run().trace);
  text.erase(text.rfind("# end"));
  std::istringstream in(text);
  try {
    read_trace(in, "t.tsv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
  // Cut in the middle of a record.
  std::string cut = text_of(press_run().trace).substr(0, 200000);
  std::istringstream in2(cut);
  EXPECT_THROW(read_trace(in2), InputError);
}

TEST(Trace, CorruptFieldReportsLine) {
  std::string text = text_of(press_run().trace);
  // Line 20 is the second record (17 metadata lines, header, record 0).
  std::size_t pos = 0;
  for (int i = 0; i < 19; ++i) pos = text.find('\n', pos) + 1;
  const auto tab = text.find('\t', pos);
  text.replace(tab + 1, 1, "x");
  std::istringstream in(text);
  try {
    read_trace(in, "t.tsv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 20u);
    EXPECT_EQ(e.source(), "t.tsv");
  }
}

TEST(Monitors, ReplayReproducesLiveReport) {
  const auto& r = press_run();
  std::istringstream in(text_of(r.trace));
  const auto rep = replay(in);
  EXPECT_EQ(rep.to_json().dump(), r.report.to_json().dump());
}

TEST(Monitors, InjectedSpikeFailsRcm) {
  auto t = press_run().trace;
  ASSERT_TRUE(evaluate(t).criterion("rcm")->pass);
  t.records[300].x_c_norm = 2e-5;
  const auto rep = evaluate(t);
  EXPECT_FALSE(rep.criterion("rcm")->pass);
  EXPECT_EQ(rep.max_x_c_norm, 2e-5);
  EXPECT_FALSE(rep.pass());
}

TEST(Monitors, ThresholdOverride) {
  const auto& r = press_run();
  MonitorThresholds th;
  th.rcm_tol = 1e-12;
  EXPECT_FALSE(evaluate(r.trace, th).pass());
  EXPECT_TRUE(evaluate(r.trace).pass());
}

TEST(Monitors, MissingTicksFailCompleteness) {
  auto t = press_run().trace;
  t.records.pop_back();
  EXPECT_FALSE(evaluate(t).criterion("complete")->pass);
}

TEST(Monitors, OnsetMatchesInfluenceReach) {
  const auto& rep = press_run().report;
  ASSERT_TRUE(rep.onset_distance.has_value());
  EXPECT_EQ(rep.onset_mismatches, 0u);
  EXPECT_LT(*rep.onset_distance, 0.015);
  EXPECT_GT(*rep.onset_distance, 0.0145);
  EXPECT_DOUBLE_EQ(rep.influence_reach, 0.015);
}

TEST(Passivity, CoastingSlackEqualsDissipatedEnergy) {
  const auto r = run_scenario(coasting());
  ASSERT_TRUE(r.trace.faults.empty());
  EXPECT_GT(r.trace.records.front().E, 1e-3);
  EXPECT_LE(r.report.max_balance_error, 1e-3);
  EXPECT_GE(r.report.min_slack, -1e-9);
  for (std::size_t k = 1; k < r.trace.records.size(); ++k) {
    EXPECT_LE(r.trace.records[k].E, r.trace.records[k - 1].E + 1e-12);
  }
}

TEST(Passivity, NegativeDampingShowsNegativeSlack) {
  auto s = coasting();
  s.admittance.damping.D_c = -VecX::Constant(5, 2.0);
  s.admittance.damping.Q.setZero();
  s.admittance.damping.G.setZero();
  s.duration = 0.5;
  const auto r = run_scenario(s);
  EXPECT_LT(r.report.min_slack, -1e-3);
  EXPECT_FALSE(r.report.criterion("passivity")->pass);
}

TEST(Passivity, SlackRestartsAtReset) {
  auto t = run_scenario(coasting()).trace;
  const auto before = passivity_monitor(t);
  t.resets.push_back(200);
  const auto after = passivity_monitor(t);
  EXPECT_EQ(after[200], 0.0);
  EXPECT_EQ(after[199], before[199]);
}

TEST(PlotData, HeadersMatchGolden) {
  const auto& r = press_run();
  const auto dir = std::filesystem::temp_directory_path() / "rcm_plot_golden";
  std::filesystem::create_directories(dir);
  const auto paths = write_plot_files(r.trace, dir);
  ASSERT_EQ(paths.size(), 5u);
  for (const auto& p : paths) {
    const auto name = std::filesystem::path(p).stem().string();
    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    std::string golden = slurp(test::source_path("tests/golden/" + name + ".header"));
    golden.pop_back();
    EXPECT_EQ(header, golden) << name;
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, r.trace.records.size());
  }
}

TEST(PlotData, PortColumnsComeFromTheTrace) {
  const auto& r = press_run();
  std::ostringstream ss;
  write_plot_table(ss, r.trace, 3);
  std::istringstream in(ss.str());
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; std::getline(in, line); ++k) {
    std::istringstream ls(line);
    double t, axial;
    ls >> t >> axial;
    ASSERT_EQ(axial, r.trace.records[k].port_force);
  }
}

}  // namespace
}  // namespace rcm

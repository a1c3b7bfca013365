#include "rcm_admittance/config.hpp"
#include "rcm_admittance/simulation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace rcm {
namespace {

std::string default_yaml() { return test::source_path("scenarios/default.yaml"); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config overlay(const std::string& text) {
  Config cfg = load_config(default_yaml());
  apply_config_text(cfg, text, "<overlay>", test::source_path("scenarios"));
  return cfg;
}

TEST(Config, DefaultFileMatchesBuiltInDefaults) {
  const auto cfg = load_config(default_yaml());
  const auto adm = cfg.admittance();
  const auto ref = AdmittanceConfig::defaults(7);
  EXPECT_EQ(adm.alpha, ref.alpha);
  EXPECT_EQ(adm.beta, ref.beta);
  EXPECT_DOUBLE_EQ(adm.dt, ref.dt);
  EXPECT_EQ(adm.W, ref.W);
  EXPECT_EQ(adm.damping.D_c, ref.damping.D_c);
  EXPECT_EQ(adm.damping.C, ref.damping.C);
  EXPECT_EQ(cfg.p_c, test::start_port());
  EXPECT_LT((cfg.q0() - test::start_q()).norm(), 1e-15);
  const auto chain = default_lwr_chain();
  std::mt19937_64 rng(60);
  for (int i = 0; i < 20; ++i) {
    const VecX q = test::random_q(chain, rng);
    EXPECT_LT((forward_kinematics(cfg.chain, q).p_t - forward_kinematics(chain, q).p_t).norm(), 1e-14);
  }
  EXPECT_EQ(cfg.region.params.d_c.value(), 0.0035);
  EXPECT_EQ(cfg.region.params.d_0, 0.0115);
}

TEST(Config, NegativeAlphaNamesFieldAndLine) {
  try {
    overlay("controller:\n  alpha: -1\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("controller.alpha"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.source(), "<overlay>");
  }
}

TEST(Config, UnknownKeyRejected) {
  try {
    overlay("scenario:\n  name: x\n  duraton: 3\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("duraton"), std::string::npos);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, SyntaxErrorHasLine) {
  try {
    parse_config("controller:\n  alpha: [1, 2\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_GT(e.line(), 0u);
  }
}

TEST(Config, OverlayKeepsUnmentionedValues) {
  const auto cfg = overlay("controller:\n  beta: 30\n");
  EXPECT_EQ(cfg.controller.beta, 30.0);
  EXPECT_EQ(cfg.controller.alpha, 25.0);
  EXPECT_EQ(cfg.sources.size(), 2u);
}

TEST(Config, WeightForms) {
  EXPECT_EQ(overlay("controller:\n  W: 2.0\n").admittance().W, 2.0 * MatX::Identity(7, 7));
  const auto d = overlay("controller:\n  W: [1, 2, 3, 4, 5, 6, 7]\n").admittance().W;
  EXPECT_EQ(d(3, 3), 4.0);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_THROW(overlay("controller:\n  W: [1, 2, 3]\n").admittance(), InputError);
}

TEST(Config, RateAndDt) {
  EXPECT_DOUBLE_EQ(overlay("controller:\n  rate_hz: 500\n").admittance().dt, 0.002);
  EXPECT_THROW(overlay("controller:\n  rate_hz: 500\n  dt: 0.004\n"), InputError);
}

TEST(Config, RelativePathsResolveAgainstTheFile) {
  const auto cfg = load_config(default_yaml(), test::source_path("scenarios/tip_guidance.yaml"));
  ASSERT_TRUE(cfg.region.file.has_value());
  EXPECT_TRUE(std::filesystem::exists(*cfg.region.file));
  EXPECT_TRUE(std::filesystem::exists(cfg.scenario.force.file));
}

TEST(Config, PressPeakCapped) {
  EXPECT_THROW(overlay("scenario:\n  force:\n    press:\n      peak_force: 31\n"), InputError);
}

TEST(Config, JointsFormEquivalentToDh) {
  // One joint per DH row: origin = previous row's fixed transform.
  std::string text = "chain:\n  joints:\n";
  const double d[7] = {0.3105, 0, 0.4, 0, 0.39, 0, 0.078};
  const double a[7] = {90, -90, -90, 90, 90, -90, 0};
  for (int i = 0; i < 7; ++i) {
    const double z = i == 0 ? 0.0 : d[i - 1];
    const double rx = i == 0 ? 0.0 : a[i - 1];
    text += "    - {origin: {xyz: [0, 0, " + std::to_string(z) + "], rpy_deg: [" + std::to_string(rx) +
            ", 0, 0]}, axis: [0, 0, 1], limits_deg: [-170, 170]}\n";
  }
  text += "  flange: {xyz: [0, 0, 0.078], rpy_deg: [0, 0, 0]}\n";
  const auto cfg = overlay(text);
  const auto ref = default_lwr_chain();
  std::mt19937_64 rng(61);
  for (int i = 0; i < 20; ++i) {
    const VecX q = test::random_q(ref, rng);
    EXPECT_LT((forward_kinematics(cfg.chain, q).p_t - forward_kinematics(ref, q).p_t).norm(), 1e-12);
  }
}

TEST(StartCheck, MisalignedPortRejected) {
  auto cfg = load_config(default_yaml());
  const auto pose = forward_kinematics(cfg.chain, cfg.q0());
  cfg.p_c = test::start_port() + 0.005 * pose.a_t();
  const auto s = build_scenario(cfg);
  try {
    check_start(s);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("5.000 mm"), std::string::npos) << e.what();
  }
}

TEST(StartCheck, BarrierContactRejected) {
  auto cfg = load_config(default_yaml());
  const auto pose = forward_kinematics(cfg.chain, cfg.q0());
  cfg.region.tubes.clear();
  TubeSpec t;
  t.center = pose.p_t - Vec3(0, 0, 0.005);
  cfg.region.tubes.push_back(t);
  const auto s = build_scenario(cfg);
  try {
    check_start(s);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("forbidden region"), std::string::npos) << e.what();
  }
}

TEST(StartCheck, DefaultPasses) {
  const auto s = build_scenario(load_config(default_yaml()));
  const auto r = check_start(s);
  EXPECT_LT(r.x_c_norm, 1e-12);
  EXPECT_GT(r.clearance, 0.015);
  EXPECT_EQ(r.active, 0u);
}

TEST(Config, ScenarioFilesAllLoad) {
  for (const char* f : {"zero_force.yaml", "tip_guidance.yaml", "tip_press.yaml", "capsule_press.yaml", "convergence.yaml"}) {
    const auto cfg = load_config(default_yaml(), test::source_path(std::string("scenarios/") + f));
    EXPECT_NO_THROW(build_scenario(cfg)) << f;
  }
  EXPECT_FALSE(slurp(default_yaml()).empty());
}

}  // namespace
}  // namespace rcm

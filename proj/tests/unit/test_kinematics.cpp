#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <array>
#include <cmath>

namespace rcm {
namespace {

// Classic 4x4 DH product, written independently of the chain representation.
Eigen::Matrix4d dh_matrix(double theta, double d, double a, double alpha) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0, sa, ca, d,
       0, 0, 0, 1;
  return m;
}

Eigen::Matrix4d lwr_oracle(const VecX& q, double tool) {
  constexpr double h = std::numbers::pi / 2;
  const std::array<double, 7> alpha = {h, -h, -h, h, h, -h, 0};
  const std::array<double, 7> d = {0.3105, 0, 0.4, 0, 0.39, 0, 0.078};
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 7; ++i) t = t * dh_matrix(q(i), d[static_cast<std::size_t>(i)], 0.0, alpha[static_cast<std::size_t>(i)]);
  Eigen::Matrix4d tz = Eigen::Matrix4d::Identity();
  tz(2, 3) = tool;
  return t * tz;
}

Vec3 rotation_log(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

TEST(Kinematics, MatchesDhProductOracle) {
  const auto chain = default_lwr_chain();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    VecX q(7);
    for (int i = 0; i < 7; ++i) q(i) = test::uniform(rng, -2.0, 2.0);
    const auto pose = forward_kinematics(chain, q);
    const Eigen::Matrix4d ref = lwr_oracle(q, 0.43);
    EXPECT_LT((pose.p_t - ref.block<3, 1>(0, 3)).norm(), 1e-12);
    EXPECT_LT((pose.R_t - ref.block<3, 3>(0, 0)).norm(), 1e-12);
    EXPECT_LT((pose.p_e - lwr_oracle(q, 0.0).block<3, 1>(0, 3)).norm(), 1e-12);
  }
}

TEST(Kinematics, StartPoseTipAndAxis) {
  const auto pose = forward_kinematics(default_lwr_chain(), test::start_q());
  EXPECT_NEAR(pose.p_t.x(), -0.60531961988343752, 1e-12);
  EXPECT_NEAR(pose.p_t.y(), -0.22031832385490335, 1e-12);
  EXPECT_NEAR(pose.p_t.z(), -0.13538495612538415, 1e-12);
  EXPECT_LT((pose.n_t() - Vec3(0, 0, -1)).norm(), 1e-12);
  EXPECT_NEAR(pose.a_t().x(), -0.939693, 1e-6);
  EXPECT_NEAR(pose.a_t().y(), -0.342020, 1e-6);
  EXPECT_NEAR(pose.o_t().x(), -0.342020, 1e-6);
  EXPECT_NEAR(pose.o_t().y(), 0.939693, 1e-6);
}

TEST(Kinematics, RoundedPortLiesNearStartAxis) {
  const auto pose = forward_kinematics(default_lwr_chain(), test::start_q());
  const Vec3 rounded(-0.6053, -0.2203, 0.0);
  EXPECT_LT(rcm_error(pose, rounded).norm(), 2e-3);
  EXPECT_LT(rcm_error(pose, test::start_port()).norm(), 1e-12);
}

TEST(Kinematics, RotationStaysOrthonormal) {
  const auto chain = default_lwr_chain();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    VecX q(7);
    for (int i = 0; i < 7; ++i) q(i) = test::uniform(rng, -3.0, 3.0);
    const Mat3 r = forward_kinematics(chain, q).R_t;
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(Kinematics, JacobianMatchesFiniteDifferences) {
  const auto chain = default_lwr_chain();
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const VecX q = test::random_q(chain, rng);
    VecX qd(7);
    for (int i = 0; i < 7; ++i) qd(i) = test::uniform(rng, -1.0, 1.0);
    const auto plus = forward_kinematics(chain, q + h * qd);
    const auto minus = forward_kinematics(chain, q - h * qd);
    const Vec6 twist = geometric_jacobian(chain, q) * qd;
    const Vec3 v_fd = (plus.p_t - minus.p_t) / (2 * h);
    const Vec3 w_fd = rotation_log(plus.R_t * minus.R_t.transpose()) / (2 * h);
    EXPECT_LT((twist.head<3>() - v_fd).norm(), 1e-6);
    EXPECT_LT((twist.tail<3>() - w_fd).norm(), 1e-6);
  }
}

TEST(Kinematics, ZeroVelocityGivesZeroTwist) {
  const auto chain = default_lwr_chain();
  const Vec6 twist = geometric_jacobian(chain, test::start_q()) * VecX::Zero(7);
  EXPECT_EQ(twist.norm(), 0.0);
}

TEST(Kinematics, RedundancyBaseSpansJacobianNullSpace) {
  const auto chain = default_lwr_chain();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const VecX q = test::random_q(chain, rng);
    const Mat6X jac = geometric_jacobian(chain, q);
    const MatX g = redundancy_null_base(jac);
    ASSERT_EQ(g.rows(), 1);
    ASSERT_EQ(g.cols(), 7);
    EXPECT_LT((g * jac.transpose()).norm(), 1e-10);
    EXPECT_LT((g * g.transpose() - MatX::Identity(1, 1)).norm(), 1e-12);
  }
}

TEST(Kinematics, SixJointChainHasEmptyRedundancyBase) {
  auto chain = default_lwr_chain();
  chain.joints.pop_back();
  std::mt19937_64 rng(5);
  const VecX q = test::random_q(chain, rng, 1e-3);
  const MatX g = redundancy_null_base(geometric_jacobian(chain, q));
  EXPECT_EQ(g.rows(), 0);
}

TEST(Kinematics, AlignedBaseIsContinuous) {
  const auto chain = default_lwr_chain();
  const VecX q = test::start_q();
  const MatX g0 = redundancy_null_base(geometric_jacobian(chain, q));
  VecX step = VecX::Constant(7, 1e-4);
  const MatX g1 = redundancy_null_base(geometric_jacobian(chain, q + step), g0);
  const MatX g1_neg = redundancy_null_base(geometric_jacobian(chain, q + step), MatX(-g0));
  EXPECT_LT((g1 - g0).norm(), 1e-2);
  EXPECT_LT((g1_neg + g0).norm(), 1e-2);
}

TEST(Kinematics, StretchedArmIsSingular) {
  const auto chain = default_lwr_chain();
  EXPECT_THROW(redundancy_null_base(geometric_jacobian(chain, VecX::Zero(7))), SingularityError);
}

TEST(Kinematics, RejectsBadJointVectors) {
  const auto chain = default_lwr_chain();
  EXPECT_THROW(forward_kinematics(chain, VecX::Zero(6)), DimensionError);
  VecX q = VecX::Zero(7);
  q(2) = std::nan("");
  EXPECT_THROW(geometric_jacobian(chain, q), DimensionError);
}

TEST(Kinematics, ValidateNamesTheField) {
  auto chain = default_lwr_chain();
  chain.tool_length = 0.0;
  try {
    chain.validate();
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("tool.length"), std::string::npos);
  }
  chain = default_lwr_chain();
  chain.joints.resize(5);
  EXPECT_THROW(chain.validate(), InputError);
}

TEST(Kinematics, JointLimits) {
  const auto chain = default_lwr_chain();
  VecX q = test::start_q();
  EXPECT_TRUE(chain.within_limits(q));
  q(1) = 121.0 * std::numbers::pi / 180.0;
  EXPECT_FALSE(chain.within_limits(q));
}

}  // namespace
}  // namespace rcm

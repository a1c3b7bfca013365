#pragma once

#include "rcm_admittance/common.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace rcm {

/// Revolute joint: fixed `origin` from the previous link frame, then rotation
/// by q about the unit `axis` expressed in that joint frame.
struct RevoluteJoint {
  Iso3 origin = Iso3::Identity();
  Vec3 axis = Vec3::UnitZ();
  double lower = -std::numbers::pi;
  double upper = std::numbers::pi;
};

/// Standard Denavit-Hartenberg row: Rz(theta) Tz(d) Tx(a) Rx(alpha).
struct DhRow {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double lower = -std::numbers::pi;
  double upper = std::numbers::pi;
};

inline Iso3 dh_fixed_part(const DhRow& row) {
  Iso3 t = Iso3::Identity();
  t.translate(Vec3(0.0, 0.0, row.d));
  t.translate(Vec3(row.a, 0.0, 0.0));
  t.rotate(Eigen::AngleAxisd(row.alpha, Vec3::UnitX()));
  return t;
}

/// Serial chain of revolute joints carrying a straight tool. The tool axis
/// n_t is the z axis of the tip frame and the shaft spans tool_length back
/// from the tip along -n_t.
struct KinematicChain {
  Iso3 base = Iso3::Identity();
  std::vector<RevoluteJoint> joints;
  Iso3 flange = Iso3::Identity();       // last link -> end-effector (sensor) frame
  Iso3 tool_offset = Iso3::Identity();  // end-effector -> tool tip
  double tool_length = 0.0;
  double tool_radius = 0.0;

  Eigen::Index dof() const { return static_cast<Eigen::Index>(joints.size()); }

  /// Throws InputError naming the violated field.
  void validate() const {
    if (joints.size() < 6) {
      throw InputError("chain.joints: at least 6 joints required, got " +
                       std::to_string(joints.size()));
    }
    if (!(tool_length > 0.0)) throw InputError("tool.length must be > 0");
    if (!(tool_radius >= 0.0)) throw InputError("tool.radius must be >= 0");
    for (std::size_t i = 0; i < joints.size(); ++i) {
      const auto& j = joints[i];
      if (!(j.lower < j.upper)) {
        throw InputError("chain.joints[" + std::to_string(i) + "]: lower limit must be < upper");
      }
      if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
        throw InputError("chain.joints[" + std::to_string(i) + "]: axis must be a unit vector");
      }
    }
  }

  bool within_limits(const VecX& q) const {
    for (Eigen::Index i = 0; i < dof(); ++i) {
      const auto& j = joints[static_cast<std::size_t>(i)];
      if (q(i) < j.lower || q(i) > j.upper) return false;
    }
    return true;
  }

  static KinematicChain from_dh(const std::vector<DhRow>& rows, double tool_length,
                                double tool_radius) {
    KinematicChain chain;
    Iso3 previous = Iso3::Identity();
    for (const auto& row : rows) {
      RevoluteJoint joint;
      joint.origin = previous;
      joint.axis = Vec3::UnitZ();
      joint.lower = row.lower;
      joint.upper = row.upper;
      chain.joints.push_back(joint);
      previous = dh_fixed_part(row);
    }
    chain.flange = previous;
    chain.tool_offset = Iso3::Identity();
    chain.tool_offset.translate(Vec3(0.0, 0.0, tool_length));
    chain.tool_length = tool_length;
    chain.tool_radius = tool_radius;
    return chain;
  }
};

/// 7-dof LWR-like arm (published LWR4 DH values) holding a 0.43 m, 7 mm tool.
inline KinematicChain default_lwr_chain() {
  constexpr double deg = std::numbers::pi / 180.0;
  constexpr double pi2 = std::numbers::pi / 2.0;
  const std::vector<DhRow> rows = {
      {0.0, pi2, 0.3105, -170 * deg, 170 * deg},  {0.0, -pi2, 0.0, -120 * deg, 120 * deg},
      {0.0, -pi2, 0.4, -170 * deg, 170 * deg},    {0.0, pi2, 0.0, -120 * deg, 120 * deg},
      {0.0, pi2, 0.39, -170 * deg, 170 * deg},    {0.0, -pi2, 0.0, -120 * deg, 120 * deg},
      {0.0, 0.0, 0.078, -170 * deg, 170 * deg},
  };
  return KinematicChain::from_dh(rows, 0.43, 0.0035);
}

struct JointState {
  VecX q;
  VecX q_dot;
};

struct ToolPose {
  Vec3 p_t = Vec3::Zero();  // tip position
  Mat3 R_t = Mat3::Identity();  // columns a_t, o_t, n_t
  Vec3 p_e = Vec3::Zero();  // end-effector position

  Vec3 a_t() const { return R_t.col(0); }
  Vec3 o_t() const { return R_t.col(1); }
  Vec3 n_t() const { return R_t.col(2); }
};

namespace detail {

inline void check_joint_vector(const KinematicChain& chain, const VecX& q) {
  require_size(q.size(), chain.dof(), "joint vector");
  if (!q.allFinite()) throw DimensionError("joint vector contains non-finite entries");
}

// World frames of each joint (after its origin, before its rotation) plus the
// end-effector and tip frames.
struct ChainFrames {
  std::vector<Iso3> joint;
  Iso3 end_effector;
  Iso3 tip;
};

inline ChainFrames chain_frames(const KinematicChain& chain, const VecX& q) {
  check_joint_vector(chain, q);
  ChainFrames frames;
  frames.joint.reserve(chain.joints.size());
  Iso3 t = chain.base;
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    t = t * chain.joints[i].origin;
    frames.joint.push_back(t);
    t = t * Eigen::AngleAxisd(q(static_cast<Eigen::Index>(i)), chain.joints[i].axis);
  }
  frames.end_effector = t * chain.flange;
  frames.tip = frames.end_effector * chain.tool_offset;
  return frames;
}

}  // namespace detail

inline ToolPose forward_kinematics(const KinematicChain& chain, const VecX& q) {
  const auto frames = detail::chain_frames(chain, q);
  ToolPose pose;
  pose.p_t = frames.tip.translation();
  pose.R_t = frames.tip.linear();
  pose.p_e = frames.end_effector.translation();
  return pose;
}

/// Geometric Jacobian of the tip: [p_t_dot; omega_t] = J_t q_dot.
inline Mat6X geometric_jacobian(const KinematicChain& chain, const VecX& q) {
  const auto frames = detail::chain_frames(chain, q);
  const Vec3 p_t = frames.tip.translation();
  Mat6X jac(6, chain.dof());
  for (std::size_t i = 0; i < chain.joints.size(); ++i) {
    const Vec3 z = frames.joint[i].linear() * chain.joints[i].axis;
    const Vec3 o = frames.joint[i].translation();
    const auto c = static_cast<Eigen::Index>(i);
    jac.block<3, 1>(0, c) = z.cross(p_t - o);
    jac.block<3, 1>(3, c) = z;
  }
  return jac;
}

inline constexpr double kJacobianSingularThreshold = 1e-6;

/// Orthonormal basis (rows) of the null space of J_t, (n-6) x n. When a
/// previous basis is given the result is rotated onto it so the basis stays
/// continuous from tick to tick (the SVD fixes it only up to sign).
inline MatX redundancy_null_base(const Mat6X& jac, const std::optional<MatX>& previous = {}) {
  const Eigen::Index n = jac.cols();
  if (n < 6) throw DimensionError("Jacobian must have at least 6 columns");
  if (!jac.allFinite()) throw DimensionError("Jacobian contains non-finite entries");
  Eigen::JacobiSVD<MatX> svd(MatX(jac), Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  if (sv(5) < kJacobianSingularThreshold) {
    throw SingularityError("tool Jacobian is singular (smallest singular value " +
                           std::to_string(sv(5)) + ")");
  }
  const Eigen::Index k = n - 6;
  MatX g = svd.matrixV().rightCols(k).transpose();
  if (k > 0 && previous && previous->rows() == k && previous->cols() == n) {
    // Orthogonal Procrustes: Q maximising tr(Q G G_prev^T).
    const MatX m = g * previous->transpose();
    Eigen::JacobiSVD<MatX> align(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatX rot = align.matrixV() * align.matrixU().transpose();
    g = rot * g;
  }
  return g;
}

}  // namespace rcm

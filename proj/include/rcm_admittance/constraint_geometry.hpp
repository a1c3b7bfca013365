#pragma once

#include "rcm_admittance/common.hpp"
#include "rcm_admittance/kinematics.hpp"

#include <optional>

namespace rcm {

inline constexpr double kMaxGramCondition = 1e8;

/// Per-tick snapshot of the remote-center-of-motion constraint quantities and
/// the maps that split joint space into constrained and free coordinates.
///
/// Rows of A span the constrained directions, rows of Z the free ones. The
/// free coordinates are ordered: axial translation, the three angular rates
/// about the port, then the n-6 self-motion coordinates.
struct RcmFrame {
  Vec3 p_c = Vec3::Zero();
  Eigen::Matrix<double, 3, 2> B_c;
  Eigen::Vector2d x_c = Eigen::Vector2d::Zero();
  Eigen::Matrix<double, 2, 6> A_x;
  MatX A;         // 2 x n
  Eigen::Matrix<double, 4, 6> Z_x;
  MatX G;         // (n-6) x n
  MatX Z;         // (n-2) x n
  MatX A_dagger;  // n x 2
  MatX Z_dagger;  // n x (n-2)
  MatX S;         // n x n
  MatX S_inv;     // n x n
  MatX W;         // n x n
  Mat6X J_t;
  ToolPose pose;

  Eigen::Index dof() const { return A.cols(); }
};

/// x_c = B_c^T (p_t - p_c): offset of the port from the tool axis, in [a_t, o_t].
inline Eigen::Vector2d rcm_error(const ToolPose& pose, const Vec3& p_c) {
  Eigen::Matrix<double, 3, 2> b;
  b << pose.a_t(), pose.o_t();
  return b.transpose() * (pose.p_t - p_c);
}

struct ConstraintJacobians {
  Eigen::Matrix<double, 2, 6> A_x;
  MatX A;
};

inline ConstraintJacobians constraint_jacobians(const ToolPose& pose, const Mat6X& jac,
                                                const Vec3& p_c) {
  Eigen::Matrix<double, 3, 2> b;
  b << pose.a_t(), pose.o_t();
  Eigen::Matrix<double, 3, 6> lever;
  lever << Mat3::Identity(), skew(pose.p_t - p_c);
  ConstraintJacobians out;
  out.A_x = b.transpose() * lever;
  out.A = out.A_x * jac;
  Eigen::JacobiSVD<MatX> svd(out.A);
  if (svd.singularValues()(1) < kJacobianSingularThreshold) {
    throw SingularityError("constraint Jacobian A lost rank");
  }
  return out;
}

struct NullBasis {
  Eigen::Matrix<double, 4, 6> Z_x;
  MatX Z;
};

/// Z_x spans the task-space null space of A_x (axial translation plus rotation
/// about the port); Z lifts it into joint space and appends the self-motion
/// base G.
inline NullBasis null_basis(const ToolPose& pose, const Mat6X& jac, const MatX& g,
                            const Vec3& p_c) {
  const Eigen::Index n = jac.cols();
  require_size(g.rows(), n - 6, "redundancy base rows");
  if (g.rows() > 0) require_size(g.cols(), n, "redundancy base cols");
  NullBasis out;
  out.Z_x.setZero();
  out.Z_x.block<1, 3>(0, 0) = pose.n_t().transpose();
  out.Z_x.block<3, 3>(1, 0) = skew(pose.p_t - p_c);
  out.Z_x.block<3, 3>(1, 3) = Mat3::Identity();

  const Mat6 jjt = jac * jac.transpose();
  Eigen::JacobiSVD<Mat6> svd(jjt);
  const auto& sv = svd.singularValues();
  if (sv(5) <= 0.0 || sv(0) / sv(5) > kMaxGramCondition) {
    throw SingularityError("J_t J_t^T is ill-conditioned");
  }
  out.Z.resize(n - 2, n);
  out.Z.topRows(4) = out.Z_x * jjt.ldlt().solve(MatX(jac));
  if (n > 6) out.Z.bottomRows(n - 6) = g;
  return out;
}

struct DecouplingMaps {
  MatX A_dagger;
  MatX Z_dagger;
  MatX S;
  MatX S_inv;
};

namespace detail {

inline MatX guarded_inverse(const MatX& gram, const char* what) {
  Eigen::JacobiSVD<MatX> svd(gram);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (!(smallest > 0.0) || sv(0) / smallest > kMaxGramCondition) {
    throw SingularityError(std::string(what) + " is ill-conditioned");
  }
  return gram.ldlt().solve(MatX::Identity(gram.rows(), gram.cols()));
}

}  // namespace detail

/// Weighted right pseudoinverses A^+ = W^-1 A^T (A W^-1 A^T)^-1 and
/// Z^+ = W Z^T (Z W Z^T)^-1, with S = [A^+ Z^T] and S^-1 = [A; Z^+^T].
inline DecouplingMaps decoupling_maps(const MatX& a, const MatX& z, const MatX& w) {
  const Eigen::Index n = a.cols();
  require_size(a.rows(), 2, "A rows");
  require_size(z.rows(), n - 2, "Z rows");
  require_size(z.cols(), n, "Z cols");
  require_size(w.rows(), n, "W rows");
  require_size(w.cols(), n, "W cols");
  const MatX w_inv = w.ldlt().solve(MatX::Identity(n, n));
  DecouplingMaps out;
  out.A_dagger = w_inv * a.transpose() * detail::guarded_inverse(a * w_inv * a.transpose(), "A W^-1 A^T");
  out.Z_dagger = w * z.transpose() * detail::guarded_inverse(z * w * z.transpose(), "Z W Z^T");
  out.S.resize(n, n);
  out.S << out.A_dagger, z.transpose();
  out.S_inv.resize(n, n);
  out.S_inv << a, out.Z_dagger.transpose();
  return out;
}

struct SplitVelocity {
  Eigen::Vector2d x_c_dot;
  VecX x_f_dot;
};

inline SplitVelocity split_velocity(const MatX& s_inv, const VecX& q_dot) {
  require_size(q_dot.size(), s_inv.cols(), "joint velocity");
  const VecX both = s_inv * q_dot;
  return {both.head<2>(), both.tail(both.size() - 2)};
}

/// Builds the full frame at configuration q. `previous_g` keeps the
/// self-motion basis continuous across ticks.
inline RcmFrame build_rcm_frame(const KinematicChain& chain, const VecX& q, const Vec3& p_c,
                                const MatX& w, const std::optional<MatX>& previous_g = {}) {
  RcmFrame f;
  f.pose = forward_kinematics(chain, q);
  f.J_t = geometric_jacobian(chain, q);
  f.p_c = p_c;
  f.W = w;
  f.B_c << f.pose.a_t(), f.pose.o_t();
  f.x_c = rcm_error(f.pose, p_c);
  auto cj = constraint_jacobians(f.pose, f.J_t, p_c);
  f.A_x = cj.A_x;
  f.A = std::move(cj.A);
  f.G = redundancy_null_base(f.J_t, previous_g);
  auto nb = null_basis(f.pose, f.J_t, f.G, p_c);
  f.Z_x = nb.Z_x;
  f.Z = std::move(nb.Z);
  auto maps = decoupling_maps(f.A, f.Z, w);
  f.A_dagger = std::move(maps.A_dagger);
  f.Z_dagger = std::move(maps.Z_dagger);
  f.S = std::move(maps.S);
  f.S_inv = std::move(maps.S_inv);
  return f;
}

}  // namespace rcm

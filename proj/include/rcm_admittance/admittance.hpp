#pragma once

#include "rcm_admittance/common.hpp"
#include "rcm_admittance/constraint_geometry.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace rcm {

/// Gains of the free-space damping D_f = D_c + D_v + D_r.
///
/// D_c holds one constant per free coordinate. The velocity term
/// Q exp(-M s) and the repulsion term G (1 - exp(-C z^2)) act on the first
/// four coordinates only (axial and angular).
struct DampingParams {
  VecX D_c;
  Eigen::Vector4d Q = Eigen::Vector4d::Zero();
  Eigen::Vector4d M = Eigen::Vector4d::Zero();
  Eigen::Vector4d G = Eigen::Vector4d::Zero();
  Eigen::Vector4d C = Eigen::Vector4d::Zero();

  /// Table of gains tuned for a 0.3-0.43 m tool held by a 7-dof arm; extra
  /// self-motion coordinates of longer chains reuse the last constant.
  static DampingParams defaults(Eigen::Index free_coords) {
    DampingParams p;
    p.D_c = VecX::Constant(free_coords, 60.0);
    const double axial_angular[4] = {10, 4, 4, 4};
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(4, free_coords); ++i) p.D_c(i) = axial_angular[i];
    p.Q << 25, 20, 20, 20;
    p.M << 22, 19, 19, 19;
    p.G << 60, 30, 30, 30;
    p.C << 0.01, 0.2, 0.2, 0.2;
    return p;
  }

  /// Upper bound of any diagonal entry of D_f.
  double max_damping() const {
    double m = D_c.size() ? D_c.maxCoeff() : 0.0;
    for (int i = 0; i < 4 && i < D_c.size(); ++i) m = std::max(m, D_c(i) + Q(i) + G(i));
    return m;
  }

  void validate(Eigen::Index free_coords) const {
    if (D_c.size() != free_coords) {
      throw InputError("controller.damping.D_c: expected " + std::to_string(free_coords) +
                       " entries, got " + std::to_string(D_c.size()));
    }
    if (free_coords < 4) throw InputError("variable damping needs at least 4 free coordinates");
    if (!(D_c.array() > 0.0).all()) throw InputError("controller.damping.D_c entries must be > 0");
    auto nonneg = [](const Eigen::Vector4d& v, const char* name) {
      if (!(v.array() >= 0.0).all()) throw InputError(std::string("controller.damping.") + name + " entries must be >= 0");
    };
    nonneg(Q, "Q");
    nonneg(M, "M");
    nonneg(G, "G");
    nonneg(C, "C");
  }
};

enum class Integrator {
  kExplicitEuler,      // q_d += q_d_dot * dt with the pre-update velocity
  kSemiImplicitEuler,  // velocity first, then position with the new velocity
};

struct AdmittanceConfig {
  double alpha = 25.0;
  double beta = 25.0;
  MatX W;
  DampingParams damping;
  double dt = 0.004;
  Integrator integrator = Integrator::kExplicitEuler;

  double rate_hz() const { return 1.0 / dt; }

  static AdmittanceConfig defaults(Eigen::Index dof) {
    AdmittanceConfig c;
    c.W = 1.5 * MatX::Identity(dof, dof);
    c.damping = DampingParams::defaults(dof - 2);
    return c;
  }

  /// dt * max(D_f) < 2 keeps the damping part of the explicit update stable.
  bool damping_step_stable() const { return dt * damping.max_damping() < 2.0; }

  void validate(Eigen::Index dof) const {
    if (!(alpha > 0.0)) throw InputError("controller.alpha must be > 0");
    if (!(beta > 0.0)) throw InputError("controller.beta must be > 0");
    if (!(dt > 0.0)) throw InputError("controller.dt must be > 0");
    if (W.rows() != dof || W.cols() != dof) {
      throw InputError("controller.W must be " + std::to_string(dof) + "x" + std::to_string(dof));
    }
    if (!W.isApprox(W.transpose(), 1e-12)) throw InputError("controller.W must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatX> eig(W);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) throw InputError("controller.W must be positive definite");
    damping.validate(dof - 2);
    if (!damping_step_stable()) {
      throw InputError("controller.dt too large for the damping gains (dt * max D_f >= 2)");
    }
  }
};

/// Reference joint state plus the previous-tick matrices used for backward
/// differences.
struct AdmittanceState {
  VecX q_d;
  VecX q_d_dot;
  std::optional<MatX> prev_A;
  std::optional<MatX> prev_Zdagger_T;
  std::optional<MatX> prev_G;
  double t = 0.0;
};

/// F_th = T_te F_h: a wrench measured at the end-effector, moved to the tip.
inline Vec6 transform_human_wrench(const Vec6& f_h, const ToolPose& pose) {
  return wrench_transfer(pose.p_e - pose.p_t) * f_h;
}

/// Diagonal of D_f. s and z use the axial component for coordinate 1 and the
/// norm of the angular block for coordinates 2-4, so those share one value.
inline VecX variable_damping(const VecX& x_f_dot, const Vec6& f_r,
                             const Eigen::Matrix<double, 4, 6>& z_x, const DampingParams& p) {
  const Eigen::Index m = p.D_c.size();
  if (m < 4 || x_f_dot.size() < 4) throw DimensionError("variable damping needs 4 free coordinates");
  const Eigen::Vector4d f_rx = z_x * f_r;
  VecX d = p.D_c;
  const double s_ax = std::abs(x_f_dot(0));
  const double s_ang = x_f_dot.segment<3>(1).norm();
  const double z_ax = std::abs(f_rx(0));
  const double z_ang = f_rx.tail<3>().norm();
  for (int i = 0; i < 4; ++i) {
    const double s = i == 0 ? s_ax : s_ang;
    const double z = i == 0 ? z_ax : z_ang;
    d(i) += p.Q(i) * std::exp(-p.M(i) * s) + p.G(i) * (1.0 - std::exp(-p.C(i) * z * z));
  }
  return d;
}

struct StepDiagnostics {
  Eigen::Vector2d x_c;
  Eigen::Vector2d x_c_dot;
  VecX x_f_dot;
  VecX q_dd;
  VecX D_f;
  Eigen::Vector2d h;
  VecX u;
  VecX filtered_human;  // Z J_t^T F_th
};

struct StepResult {
  AdmittanceState next;
  StepDiagnostics diag;
};

/// One tick of the target admittance
///   q_dd = -S [h; u] + Z^T Z J_t^T (F_th + F_r)
///   h = A_dot q_dot + 2 alpha x_c_dot + beta^2 x_c
///   u = (D_f Z^+^T + d(Z^+^T)/dt) q_dot
/// with A_dot and d(Z^+^T)/dt taken as backward differences (zero on the
/// first tick). `frame` must be built at state.q_d.
inline StepResult admittance_step(const AdmittanceState& state, const RcmFrame& frame,
                                  const Vec6& f_th, const Vec6& f_r, const AdmittanceConfig& cfg) {
  const Eigen::Index n = frame.dof();
  require_size(state.q_d.size(), n, "q_d");
  require_size(state.q_d_dot.size(), n, "q_d_dot");
  const MatX zdt = frame.Z_dagger.transpose();

  StepResult r;
  auto& d = r.diag;
  d.x_c = frame.x_c;
  d.x_c_dot = frame.A * state.q_d_dot;
  d.x_f_dot = zdt * state.q_d_dot;

  MatX a_dot = MatX::Zero(2, n);
  MatX zdt_dot = MatX::Zero(n - 2, n);
  if (state.prev_A) a_dot = (frame.A - *state.prev_A) / cfg.dt;
  if (state.prev_Zdagger_T) zdt_dot = (zdt - *state.prev_Zdagger_T) / cfg.dt;

  d.D_f = variable_damping(d.x_f_dot, f_r, frame.Z_x, cfg.damping);
  d.h = a_dot * state.q_d_dot + 2.0 * cfg.alpha * d.x_c_dot + cfg.beta * cfg.beta * d.x_c;
  d.u = (d.D_f.asDiagonal() * zdt + zdt_dot) * state.q_d_dot;

  VecX hu(n);
  hu << d.h, d.u;
  const MatX zjt = frame.Z * frame.J_t.transpose();
  d.filtered_human = zjt * f_th;
  d.q_dd = -frame.S * hu + frame.Z.transpose() * (zjt * (f_th + f_r));

  auto& next = r.next;
  next.q_d_dot = state.q_d_dot + d.q_dd * cfg.dt;
  next.q_d = state.q_d + (cfg.integrator == Integrator::kExplicitEuler ? state.q_d_dot : next.q_d_dot) * cfg.dt;
  next.prev_A = frame.A;
  next.prev_Zdagger_T = zdt;
  next.prev_G = frame.G;
  next.t = state.t + cfg.dt;
  if (!next.q_d.allFinite() || !next.q_d_dot.allFinite()) {
    throw Error("non-finite joint acceleration at t = " + std::to_string(state.t));
  }
  return r;
}

}  // namespace rcm

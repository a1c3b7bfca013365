// Smallest useful control loop: default arm, one vessel tube under the tip,
// a gentle downward push. Prints tip depth, clearance and RCM error.

#include "rcm_admittance/admittance.hpp"
#include "rcm_admittance/constraint_geometry.hpp"
#include "rcm_admittance/point_cloud.hpp"
#include "rcm_admittance/potential_field.hpp"

#include <cstdio>
#include <numbers>

int main() {
  using namespace rcm;
  const auto chain = default_lwr_chain();
  VecX q(7);
  q << 20, 50, 0, -70, 0, 60, 0;
  q *= std::numbers::pi / 180.0;

  const auto pose = forward_kinematics(chain, q);
  const Vec3 p_c(pose.p_t.x(), pose.p_t.y(), 0.0);  // port on the tool axis
  ForbiddenRegion region(make_tube_cloud(pose.p_t + Vec3(0, 0, -0.03), Vec3::UnitY(), 0.003, 0.06, 0.003),
                         0.0035, 0.0115, 0.01);

  const auto cfg = AdmittanceConfig::defaults(chain.dof());
  AdmittanceState state{q, VecX::Zero(chain.dof()), {}, {}, {}, 0.0};
  Vec6 push = Vec6::Zero();
  push(2) = -5.0;

  for (int k = 0; k <= 1000; ++k) {
    const auto frame = build_rcm_frame(chain, state.q_d, p_c, cfg.W, state.prev_G);
    const auto rep = tip_repulsion(frame.pose.p_t, region);
    const auto step = admittance_step(state, frame, transform_human_wrench(push, frame.pose), rep.F_r, cfg);
    if (k % 125 == 0) {
      std::printf("t=%5.2f s  tip z=%8.5f m  clearance=%7.5f m  |x_c|=%.2e m\n", state.t, frame.pose.p_t.z(),
                  rep.min_distance, frame.x_c.norm());
    }
    state = step.next;
  }
  return 0;
}

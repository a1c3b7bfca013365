// Regenerates the data files under scenarios/data.
//   make_fixtures <scenarios/data>

#include "rcm_admittance/force_profile.hpp"
#include "rcm_admittance/point_cloud.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

int main(int argc, char** argv) {
  using namespace rcm;
  const std::filesystem::path dir = argc > 1 ? argv[1] : "scenarios/data";
  std::filesystem::create_directories(dir);

  // Seven parallel vessels 4 cm below the tip at the start pose.
  TubeSpec bundle;
  bundle.center = Vec3(-0.6033196198834375, -0.2203183238549033, -0.17538495612538415);
  bundle.axis = Vec3::UnitY();
  bundle.count = 7;
  bundle.step = Vec3(0.007, 0.0, 0.0);
  const auto vessels = generate_tubes({bundle}, 0);

  // Context: a coarse ring marking the skin around the port.
  std::vector<Vec3> skin;
  for (int i = 0; i < 24; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 24.0;
    skin.emplace_back(-0.6053196198834375 + 0.03 * std::cos(a), -0.2203183238549033 + 0.03 * std::sin(a), 0.0);
  }
  {
    std::ofstream out(dir / "vessels.xyz");
    out << "# synthetic vessel bundle below the port\n";
    write_point_cloud(out, vessels, skin);
  }

  // Thirty seconds of guidance: lateral strokes, a twist, then a slow press
  // into the vessels and a release.
  ProfileBuilder b;
  Vec6 twist = Vec6::Zero();
  twist(5) = 0.3;
  b.hold(1)
      .pulse({3, 0, 0}, 2).hold(0.5)
      .pulse({-3, 0, 0}, 2).hold(0.5)
      .pulse({0, 3, 0}, 2).hold(0.5)
      .pulse({0, -3, 0}, 2).hold(0.5)
      .ramp_to(twist, 1).ramp_to(Vec6::Zero(), 1).hold(0.5)
      .force_to({0, 0, -0.8}, 0.5).hold(4)
      .force_to({0, 0, -30}, 2).hold(5)
      .force_to({0, 0, 0}, 2)
      .pulse({0, 0, 1.0}, 1)
      .hold(2);
  {
    std::ofstream out(dir / "guidance_profile.txt");
    out << "# scripted guidance at the end-effector, base frame\n";
    write_force_profile(out, b.build());
  }
  std::printf("wrote %zu vessel points and a %.1f s profile to %s\n", vessels.size(), b.end_time(),
              dir.string().c_str());
  return 0;
}

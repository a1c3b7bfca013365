#include "rcm_admittance/point_cloud.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace rcm {
namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("rcm_pc_" + name);
  std::ofstream(path) << text;
  return path.string();
}

RegionParams params_3p5mm() {
  RegionParams p;
  p.d_c = 0.0035;
  return p;
}

TEST(PointCloud, ThreePointToy) {
  const auto path = write_temp("toy.xyz", "# units: m\n0 0 0\n0.01 0 0\n0 0.02 0.005\n");
  const auto region = load_point_cloud(path, params_3p5mm());
  EXPECT_EQ(region.size(), 3u);
  EXPECT_EQ(region.index().query_radius(Vec3::Zero(), 1.0).size(), 3u);
  EXPECT_EQ(region.d_c(), 0.0035);
  EXPECT_EQ(region.d_0(), 0.0115);
}

TEST(PointCloud, VoxelDownsampleKeepsOnePointPerVoxel) {
  std::mt19937_64 rng(40);
  std::vector<Vec3> dense;
  for (int i = 0; i < 20000; ++i) dense.emplace_back(test::uniform(rng, 0, 0.05), test::uniform(rng, 0, 0.05), test::uniform(rng, 0, 0.02));
  const double voxel = 0.005;
  const auto [pts, gains] = voxel_downsample(dense, {}, voxel);
  std::set<std::tuple<long, long, long>> seen;
  for (const auto& p : pts) {
    auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / voxel)), static_cast<long>(std::floor(p.y() / voxel)),
                               static_cast<long>(std::floor(p.z() / voxel)));
    EXPECT_TRUE(seen.insert(key).second);
  }
  EXPECT_EQ(pts.size(), 10u * 10u * 4u);
  EXPECT_EQ(gains.size(), pts.size());
}

TEST(PointCloud, DownsamplingThroughParams) {
  std::ostringstream text;
  for (int i = 0; i < 10; ++i) text << 0.0001 * i << " 0 0\n";
  text << "0.05 0 0\n";
  const auto path = write_temp("dense.xyz", text.str());
  auto params = params_3p5mm();
  params.voxel = 0.005;
  const auto region = load_point_cloud(path, params);
  EXPECT_EQ(region.size(), 2u);
  EXPECT_NEAR(region.points()[0].x(), 0.00045, 1e-15);
}

TEST(PointCloud, MalformedRowReportsLine) {
  const auto path = write_temp("bad.xyz", "0 0 0\n0 zero 0\n");
  try {
    load_point_cloud(path, params_3p5mm());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.source(), path);
    EXPECT_NE(std::string(e.what()).find(path + ":2:"), std::string::npos);
  }
  std::istringstream short_row("0 0\n");
  EXPECT_THROW(parse_point_cloud(short_row), InputError);
}

TEST(PointCloud, NonMetricUnitsRejected) {
  std::istringstream in("# units: mm\n1 2 3\n");
  try {
    parse_point_cloud(in);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("meters"), std::string::npos);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(PointCloud, EmptyForbiddenSetRejected) {
  const auto path = write_temp("ctx.xyz", "0 0 0 context\n");
  EXPECT_THROW(load_point_cloud(path, params_3p5mm()), InputError);
  EXPECT_THROW(load_point_cloud(write_temp("none.xyz", "# nothing\n"), params_3p5mm()), InputError);
  EXPECT_THROW(load_point_cloud("/nonexistent/cloud.xyz", params_3p5mm()), InputError);
}

TEST(PointCloud, LabelsPartitionForbiddenAndContext) {
  std::istringstream in("0 0 0\n1 0 0 forbidden\n2 0 0 skin\n3 0 0 vessel 0.02\n");
  const auto cloud = parse_point_cloud(in, {"forbidden", "vessel"});
  ASSERT_EQ(cloud.forbidden.size(), 3u);
  ASSERT_EQ(cloud.context.size(), 1u);
  EXPECT_EQ(cloud.context[0].x(), 2.0);
  EXPECT_TRUE(std::isnan(cloud.gains[0]));
  EXPECT_EQ(cloud.gains[2], 0.02);
  const auto region = make_region(cloud, params_3p5mm());
  EXPECT_EQ(region.gain(0), 0.01);
  EXPECT_EQ(region.gain(2), 0.02);
  EXPECT_EQ(region.context_points().size(), 1u);
}

TEST(PointCloud, DensityDerivesCoveringRadius) {
  RegionParams p;
  p.rho = 1.0;
  EXPECT_NEAR(resolve_covering_radius(p), 8.66025e-3, 1e-8);
  RegionParams none;
  EXPECT_THROW(resolve_covering_radius(none), InputError);
}

TEST(PointCloud, WriteParseRoundTrip) {
  std::mt19937_64 rng(41);
  std::vector<Vec3> f, c;
  for (int i = 0; i < 50; ++i) f.emplace_back(test::uniform(rng, -1, 1), test::uniform(rng, -1, 1), test::uniform(rng, -1, 1));
  for (int i = 0; i < 5; ++i) c.emplace_back(test::uniform(rng, -1, 1), test::uniform(rng, -1, 1), test::uniform(rng, -1, 1));
  std::stringstream ss;
  write_point_cloud(ss, f, c);
  const auto cloud = parse_point_cloud(ss);
  ASSERT_EQ(cloud.forbidden.size(), f.size());
  ASSERT_EQ(cloud.context.size(), c.size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(cloud.forbidden[i], f[i]);
}

TEST(TubeFixture, InfluenceBoundaryAtFifteenMillimetres) {
  TubeSpec spec;
  const auto pts = generate_tubes({spec}, 0);
  const ForbiddenRegion region(pts, 0.0035, 0.0115, 0.01);
  EXPECT_NEAR(region.d_c() + region.d_0(), 0.015, 1e-15);
  // Move a probe radially out from a cloud point in the middle of the tube.
  const Vec3 p = pts[pts.size() / 2];
  Vec3 radial = p - spec.center;
  radial -= spec.axis * spec.axis.dot(radial);
  radial.normalize();
  for (double gap : {0.0149, 0.01499, 0.01501, 0.0151}) {
    const auto res = tip_repulsion(p + gap * radial, region);
    EXPECT_NEAR(res.min_distance, gap, 1e-12);
    EXPECT_EQ(res.active_count > 0, gap < 0.015) << gap;
  }
}

TEST(TubeFixture, DeterministicForSeed) {
  TubeSpec spec;
  spec.jitter = 0.0005;
  spec.count = 3;
  spec.step = Vec3(0.007, 0, 0);
  const auto a = generate_tubes({spec}, 7);
  const auto b = generate_tubes({spec}, 7);
  const auto c = generate_tubes({spec}, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  TubeSpec bad;
  bad.spacing = 0.0;
  EXPECT_THROW(generate_tubes({bad}, 0), InputError);
}

TEST(TubeFixture, ShippedVesselFileLoads) {
  RegionParams p = params_3p5mm();
  const auto region = load_point_cloud(test::source_path("scenarios/data/vessels.xyz"), p);
  EXPECT_GT(region.size(), 1000u);
  EXPECT_GT(region.context_points().size(), 0u);
}

}  // namespace
}  // namespace rcm

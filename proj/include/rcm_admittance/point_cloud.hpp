#pragma once

#include "rcm_admittance/common.hpp"
#include "rcm_admittance/potential_field.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace rcm {

/// Raw contents of a point-cloud file.
///
/// Format: one point per line, `x y z [label] [k]`, meters, base frame.
/// `#` starts a comment. A `# units: <u>` comment declares the length unit;
/// only `m` is accepted. Points without a label are forbidden; labelled
/// points are forbidden when the label is in the forbidden set, otherwise
/// they are context (display-only). The optional fifth column overrides the
/// field gain of that point.
struct PointCloudFile {
  std::vector<Vec3> forbidden;
  std::vector<double> gains;  // NaN where no override was given
  std::vector<Vec3> context;
};

inline PointCloudFile parse_point_cloud(std::istream& in,
                                        const std::set<std::string>& forbidden_labels = {"forbidden"}) {
  PointCloudFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::string comment = line.substr(hash + 1);
      const auto colon = comment.find("units:");
      if (colon != std::string::npos) {
        std::istringstream cs(comment.substr(colon + 6));
        std::string unit;
        cs >> unit;
        if (unit != "m") throw InputError("point cloud must be in meters, found units '" + unit + "'", lineno);
      }
      line.erase(hash);
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 3 || tok.size() > 5) {
      throw InputError("expected 'x y z [label] [k]', got " + std::to_string(tok.size()) + " fields", lineno);
    }
    Vec3 p;
    for (int i = 0; i < 3; ++i) {
      std::size_t used = 0;
      try {
        p(i) = std::stod(tok[static_cast<std::size_t>(i)], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok[static_cast<std::size_t>(i)].size() || !std::isfinite(p(i))) {
        throw InputError("malformed coordinate '" + tok[static_cast<std::size_t>(i)] + "'", lineno);
      }
    }
    double gain = std::numeric_limits<double>::quiet_NaN();
    bool forbidden = true;
    if (tok.size() >= 4) forbidden = forbidden_labels.contains(tok[3]);
    if (tok.size() == 5) {
      std::size_t used = 0;
      try {
        gain = std::stod(tok[4], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok[4].size() || !(gain > 0.0)) {
        throw InputError("malformed gain '" + tok[4] + "'", lineno);
      }
    }
    if (forbidden) {
      out.forbidden.push_back(p);
      out.gains.push_back(gain);
    } else {
      out.context.push_back(p);
    }
  }
  return out;
}

/// Voxel-grid downsampling: one centroid per occupied voxel, voxels visited in
/// lexicographic order. Gains of merged points are averaged.
inline std::pair<std::vector<Vec3>, std::vector<double>> voxel_downsample(
    const std::vector<Vec3>& points, const std::vector<double>& gains, double voxel) {
  if (!(voxel > 0.0)) throw InputError("voxel size must be > 0");
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::size_t count = 0;
    double gain_sum = 0.0;
    std::size_t gain_count = 0;
  };
  std::map<std::tuple<long long, long long, long long>, Acc> voxels;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    auto key = std::make_tuple(static_cast<long long>(std::floor(p.x() / voxel)),
                               static_cast<long long>(std::floor(p.y() / voxel)),
                               static_cast<long long>(std::floor(p.z() / voxel)));
    auto& acc = voxels[key];
    acc.sum += p;
    ++acc.count;
    if (i < gains.size() && !std::isnan(gains[i])) {
      acc.gain_sum += gains[i];
      ++acc.gain_count;
    }
  }
  std::vector<Vec3> out_pts;
  std::vector<double> out_gains;
  out_pts.reserve(voxels.size());
  for (const auto& [key, acc] : voxels) {
    out_pts.push_back(acc.sum / static_cast<double>(acc.count));
    out_gains.push_back(acc.gain_count ? acc.gain_sum / static_cast<double>(acc.gain_count)
                                       : std::numeric_limits<double>::quiet_NaN());
  }
  return {std::move(out_pts), std::move(out_gains)};
}

struct RegionParams {
  std::optional<double> d_c;    // explicit covering radius, m
  std::optional<double> rho;    // or density, points per cm^3
  double d_0 = 0.0115;
  double k = 0.01;
  std::optional<double> voxel;  // downsampling voxel edge, m
  std::set<std::string> forbidden_labels = {"forbidden"};
};

inline double resolve_covering_radius(const RegionParams& params) {
  if (params.d_c) {
    if (!(*params.d_c > 0.0)) throw InputError("region.d_c must be > 0");
    return *params.d_c;
  }
  if (params.rho) return covering_radius(*params.rho);
  throw InputError("region needs either d_c or density");
}

inline ForbiddenRegion make_region(PointCloudFile cloud, const RegionParams& params) {
  if (cloud.forbidden.empty()) throw InputError("point cloud has no forbidden points");
  if (params.voxel) {
    auto [pts, gains] = voxel_downsample(cloud.forbidden, cloud.gains, *params.voxel);
    cloud.forbidden = std::move(pts);
    cloud.gains = std::move(gains);
  }
  std::vector<double> gains(cloud.forbidden.size(), params.k);
  for (std::size_t i = 0; i < gains.size() && i < cloud.gains.size(); ++i) {
    if (!std::isnan(cloud.gains[i])) gains[i] = cloud.gains[i];
  }
  ForbiddenRegion region(std::move(cloud.forbidden), resolve_covering_radius(params), params.d_0,
                         params.k, std::move(gains));
  region.set_context_points(std::move(cloud.context));
  return region;
}

inline ForbiddenRegion load_point_cloud(const std::string& path, const RegionParams& params) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open point cloud '" + path + "'");
  PointCloudFile cloud;
  try {
    cloud = parse_point_cloud(in, params.forbidden_labels);
  } catch (const InputError& e) {
    throw InputError(e.detail(), e.line(), path);
  }
  return make_region(std::move(cloud), params);
}

/// Synthetic vessel: points on a tube surface of the given radius, in rings
/// `spacing` apart along the axis, about `spacing` apart around each ring.
inline std::vector<Vec3> make_tube_cloud(const Vec3& center, const Vec3& axis, double radius,
                                         double length, double spacing) {
  const Vec3 n = axis.normalized();
  const Vec3 u = n.unitOrthogonal();
  const Vec3 v = n.cross(u);
  const int rings = std::max(1, static_cast<int>(std::ceil(length / spacing)) + 1);
  const int around = std::max(3, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(rings * around));
  for (int i = 0; i < rings; ++i) {
    const double s = -0.5 * length + length * i / std::max(1, rings - 1);
    for (int j = 0; j < around; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / around;
      pts.push_back(center + n * s + radius * (std::cos(phi) * u + std::sin(phi) * v));
    }
  }
  return pts;
}

/// Parallel copies of one tube, `count` of them spaced by `step` and centred
/// on `center`. `jitter` displaces every point uniformly in a cube of that
/// half-width, drawn from a seeded generator.
struct TubeSpec {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitY();
  double radius = 0.003;
  double length = 0.08;
  double spacing = 0.003;
  int count = 1;
  Vec3 step = Vec3::Zero();
  double jitter = 0.0;
};

namespace detail {

// Portable uniform draw in [-1, 1): the standard distributions are not
// guaranteed to produce the same sequence across library implementations.
inline double symmetric_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace detail

inline std::vector<Vec3> generate_tubes(const std::vector<TubeSpec>& specs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> pts;
  for (const auto& spec : specs) {
    if (!(spec.radius >= 0.0) || !(spec.length >= 0.0) || !(spec.spacing > 0.0) || spec.count < 1) {
      throw InputError("tube needs radius >= 0, length >= 0, spacing > 0 and count >= 1");
    }
    if (!(spec.axis.norm() > 0.0)) throw InputError("tube axis must be non-zero");
    for (int c = 0; c < spec.count; ++c) {
      const Vec3 center = spec.center + (c - 0.5 * (spec.count - 1)) * spec.step;
      for (Vec3 p : make_tube_cloud(center, spec.axis, spec.radius, spec.length, spec.spacing)) {
        if (spec.jitter > 0.0) {
          for (int i = 0; i < 3; ++i) p(i) += spec.jitter * detail::symmetric_unit(rng);
        }
        pts.push_back(p);
      }
    }
  }
  return pts;
}

inline void write_point_cloud(std::ostream& out, const std::vector<Vec3>& forbidden,
                              const std::vector<Vec3>& context = {}) {
  out << "# units: m\n";
  out.precision(17);
  for (const auto& p : forbidden) out << p.x() << ' ' << p.y() << ' ' << p.z() << " forbidden\n";
  for (const auto& p : context) out << p.x() << ' ' << p.y() << ' ' << p.z() << " context\n";
}

}  // namespace rcm

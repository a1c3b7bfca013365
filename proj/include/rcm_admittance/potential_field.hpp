#pragma once

#include "rcm_admittance/common.hpp"
#include "rcm_admittance/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace rcm {

/// Radius (m) of spheres that close the gaps of a cloud with homogeneous
/// density rho (points per cm^3): half the diagonal of the cube holding one point.
inline double covering_radius(double rho_per_cm3) {
  if (!(rho_per_cm3 > 0.0) || !std::isfinite(rho_per_cm3)) {
    throw InputError("point density must be positive, got " + std::to_string(rho_per_cm3));
  }
  const double cm = std::sqrt(3.0) / (2.0 * std::cbrt(rho_per_cm3));
  return cm * 0.01;
}

/// Uniform hash grid over a fixed point set. Queries return indices in
/// ascending order so that sums over the result are reproducible.
class SpatialHashGrid {
 public:
  SpatialHashGrid() = default;

  SpatialHashGrid(std::shared_ptr<const std::vector<Vec3>> points, double cell_size)
      : points_(std::move(points)), cell_(cell_size) {
    if (!(cell_size > 0.0)) throw InputError("grid cell size must be positive");
    const auto& pts = *points_;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cells_[key(cell_of(pts[i]))].push_back(static_cast<std::uint32_t>(i));
    }
    if (!pts.empty()) {
      lo_ = hi_ = pts.front();
      for (const auto& p : pts) {
        lo_ = lo_.cwiseMin(p);
        hi_ = hi_.cwiseMax(p);
      }
    }
  }

  double cell_size() const { return cell_; }

  /// Indices of points inside the closed axis-aligned box.
  std::vector<std::uint32_t> query_box(const Vec3& lo, const Vec3& hi) const {
    std::vector<std::uint32_t> out;
    if (points_ == nullptr || points_->empty()) return out;
    const Vec3 clo = lo.cwiseMax(lo_);
    const Vec3 chi = hi.cwiseMin(hi_);
    if ((clo.array() > chi.array()).any()) return out;
    const Eigen::Vector3i a = cell_of(clo);
    const Eigen::Vector3i b = cell_of(chi);
    const double cells = double(b.x() - a.x() + 1) * double(b.y() - a.y() + 1) * double(b.z() - a.z() + 1);
    auto inside = [&](const Vec3& p) {
      return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    };
    if (cells > double(points_->size())) {
      for (std::size_t i = 0; i < points_->size(); ++i) {
        if (inside((*points_)[i])) out.push_back(static_cast<std::uint32_t>(i));
      }
      return out;
    }
    for (int x = a.x(); x <= b.x(); ++x) {
      for (int y = a.y(); y <= b.y(); ++y) {
        for (int z = a.z(); z <= b.z(); ++z) {
          auto it = cells_.find(key({x, y, z}));
          if (it == cells_.end()) continue;
          for (auto idx : it->second) {
            if (inside((*points_)[idx])) out.push_back(idx);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Indices of points with ||p - center|| <= radius.
  std::vector<std::uint32_t> query_radius(const Vec3& center, double radius) const {
    const Vec3 r = Vec3::Constant(radius);
    auto candidates = query_box(center - r, center + r);
    std::erase_if(candidates, [&](std::uint32_t i) {
      return ((*points_)[i] - center).norm() > radius;
    });
    return candidates;
  }

  const Vec3& bounds_min() const { return lo_; }
  const Vec3& bounds_max() const { return hi_; }

 private:
  Eigen::Vector3i cell_of(const Vec3& p) const {
    return {static_cast<int>(std::floor(p.x() / cell_)), static_cast<int>(std::floor(p.y() / cell_)),
            static_cast<int>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const Eigen::Vector3i& c) {
    constexpr std::uint64_t mask = (1ULL << 21) - 1;
    return ((static_cast<std::uint64_t>(c.x()) & mask) << 42) |
           ((static_cast<std::uint64_t>(c.y()) & mask) << 21) |
           (static_cast<std::uint64_t>(c.z()) & mask);
  }

  std::shared_ptr<const std::vector<Vec3>> points_;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  Vec3 lo_ = Vec3::Zero();
  Vec3 hi_ = Vec3::Zero();
};

/// Point-cloud forbidden region: the union of spheres of radius d_c around
/// each point, protected by barrier potentials acting within d_0 of the
/// sphere surfaces. Immutable once constructed.
class ForbiddenRegion {
 public:
  ForbiddenRegion() = default;

  ForbiddenRegion(std::vector<Vec3> points, double d_c, double d_0, double k,
                  std::vector<double> point_gains = {}, double index_margin = 0.0)
      : points_(std::make_shared<const std::vector<Vec3>>(std::move(points))),
        gains_(std::move(point_gains)),
        d_c_(d_c),
        d_0_(d_0),
        k_(k) {
    if (points_->empty()) throw InputError("forbidden region has no points");
    if (!(d_c_ > 0.0)) throw InputError("region.d_c must be > 0");
    if (!(d_0_ > 0.0)) throw InputError("region.d_0 must be > 0");
    if (!(k_ > 0.0)) throw InputError("region.k must be > 0");
    if (gains_.empty()) gains_.assign(points_->size(), k_);
    if (gains_.size() != points_->size()) throw InputError("per-point gains do not match point count");
    for (double g : gains_) {
      if (!(g > 0.0)) throw InputError("per-point gain must be > 0");
    }
    for (const auto& p : *points_) {
      if (!p.allFinite()) throw InputError("forbidden region contains a non-finite point");
    }
    index_ = SpatialHashGrid(points_, d_c_ + d_0_ + index_margin);
  }

  const std::vector<Vec3>& points() const { return *points_; }
  double gain(std::size_t i) const { return gains_[i]; }
  double d_c() const { return d_c_; }
  double d_0() const { return d_0_; }
  double k() const { return k_; }
  const SpatialHashGrid& index() const { return index_; }
  std::size_t size() const { return points_->size(); }

  /// Display-only points (loaded with a non-forbidden label).
  const std::vector<Vec3>& context_points() const { return context_; }
  void set_context_points(std::vector<Vec3> pts) { context_ = std::move(pts); }

 private:
  std::shared_ptr<const std::vector<Vec3>> points_ = std::make_shared<const std::vector<Vec3>>();
  std::vector<double> gains_;
  std::vector<Vec3> context_;
  double d_c_ = 0.0;
  double d_0_ = 0.0;
  double k_ = 0.0;
  SpatialHashGrid index_;
};

enum class BarrierPolicy { kThrow, kClamp };

inline constexpr double kPsiClamp = 1.0 - 1e-12;

/// One barrier term evaluated at a distance from its point.
struct BarrierTerm {
  double psi = 0.0;
  double V = 0.0;
  double k_v = 0.0;      // variable stiffness: f = k_v * e
  double e_norm = 0.0;   // (d_0 + d_c) - distance
  bool active = false;
};

/// V = (k/2) ln(1/(1-psi))^2 with psi = (dist - (d_0 + d_c))^2 / d_0^2 inside
/// the influence shell, zero outside. `d_c` already includes any tool radius.
inline BarrierTerm barrier_term(double distance, double d_c, double d_0, double k,
                                BarrierPolicy policy = BarrierPolicy::kThrow) {
  BarrierTerm t;
  const double reach = d_0 + d_c;
  if (distance >= reach) return t;
  t.active = true;
  if (distance <= d_c && policy == BarrierPolicy::kThrow) {
    throw ConstraintViolation("distance " + std::to_string(distance) +
                              " m reached covering sphere radius " + std::to_string(d_c) + " m");
  }
  const double gap = reach - distance;
  t.psi = (gap * gap) / (d_0 * d_0);
  if (distance <= d_c || t.psi > kPsiClamp) t.psi = kPsiClamp;
  const double one_minus = 1.0 - t.psi;
  const double log_term = std::log(1.0 / one_minus);
  t.V = 0.5 * k * log_term * log_term;
  t.k_v = 2.0 * k / (d_0 * d_0 * one_minus) * log_term;
  t.e_norm = gap;
  return t;
}

struct RepulsionResult {
  Vec6 F_r = Vec6::Zero();
  double V_total = 0.0;
  double min_distance = std::numeric_limits<double>::infinity();
  std::size_t active_count = 0;
};

struct PotentialSample {
  double V_total = 0.0;
  std::vector<std::pair<std::uint32_t, double>> psi;  // (point index, psi) for active points
};

/// Total potential at a point. offset = 0 for the tip, r for a capsule point.
inline PotentialSample potential_at(const Vec3& point, const ForbiddenRegion& region, double offset,
                                    BarrierPolicy policy = BarrierPolicy::kThrow) {
  PotentialSample out;
  const double dc = region.d_c() + offset;
  for (auto i : region.index().query_radius(point, dc + region.d_0())) {
    const double dist = (point - region.points()[i]).norm();
    const auto t = barrier_term(dist, dc, region.d_0(), region.gain(i), policy);
    if (!t.active) continue;
    out.V_total += t.V;
    out.psi.emplace_back(i, t.psi);
  }
  return out;
}

/// Distance from `point` to the nearest cloud point (exact). Grows the search
/// box until a hit inside the box radius is found.
inline double nearest_distance(const ForbiddenRegion& region, const Vec3& seg_a, const Vec3& seg_b);

/// Repulsive wrench at the tip from all points within influence.
inline RepulsionResult tip_repulsion(const Vec3& p_t, const ForbiddenRegion& region,
                                     BarrierPolicy policy = BarrierPolicy::kThrow) {
  RepulsionResult out;
  const double dc = region.d_c();
  for (auto i : region.index().query_radius(p_t, dc + region.d_0())) {
    const Vec3 diff = p_t - region.points()[i];
    const double dist = diff.norm();
    const auto t = barrier_term(dist, dc, region.d_0(), region.gain(i), policy);
    if (!t.active) continue;
    out.V_total += t.V;
    ++out.active_count;
    if (dist > 0.0) out.F_r.head<3>() += t.k_v * t.e_norm * (diff / dist);
  }
  out.min_distance = nearest_distance(region, p_t, p_t);
  return out;
}

struct CapsuleNearest {
  double zeta = 0.0;
  double sigma = 0.0;
  Vec3 p_star = Vec3::Zero();
};

/// Nearest point on the shaft p_s(sigma) = p_t - n_t L sigma, sigma in [0, 1].
inline CapsuleNearest capsule_nearest(const Vec3& p_t, const Vec3& n_t, double length,
                                      const Vec3& p_i) {
  CapsuleNearest out;
  out.zeta = n_t.dot(p_t - p_i) / length;
  out.sigma = std::clamp(out.zeta, 0.0, 1.0);
  out.p_star = p_t - n_t * length * out.sigma;
  return out;
}

inline double segment_distance(const Vec3& p_t, const Vec3& n_t, double length, const Vec3& p) {
  if (length <= 0.0) return (p - p_t).norm();
  return (capsule_nearest(p_t, n_t, length, p).p_star - p).norm();
}

inline double nearest_distance(const ForbiddenRegion& region, const Vec3& seg_a, const Vec3& seg_b) {
  const Vec3 axis = seg_a - seg_b;
  const double length = axis.norm();
  const Vec3 n = length > 0.0 ? Vec3(axis / length) : Vec3::UnitZ();
  const Vec3 lo = seg_a.cwiseMin(seg_b);
  const Vec3 hi = seg_a.cwiseMax(seg_b);
  const double span = (region.index().bounds_max() - region.index().bounds_min()).norm() +
                      (hi - lo).norm() + (seg_a - region.index().bounds_min()).norm();
  double radius = region.d_c() + region.d_0();
  for (;;) {
    const Vec3 r = Vec3::Constant(radius);
    double best = std::numeric_limits<double>::infinity();
    for (auto i : region.index().query_box(lo - r, hi + r)) {
      best = std::min(best, segment_distance(seg_a, n, length, region.points()[i]));
    }
    if (best <= radius || radius > span) return best;
    radius *= 2.0;
  }
}

/// Whole-shaft repulsion: each point repels the nearest shaft point p* with the
/// covering radius grown by the tool radius, and the force is carried to the
/// tip as [f; (p* - p_t) x f].
inline RepulsionResult capsule_repulsion(const ToolPose& pose, double length, double radius,
                                         const ForbiddenRegion& region,
                                         BarrierPolicy policy = BarrierPolicy::kThrow) {
  RepulsionResult out;
  const Vec3 n_t = pose.n_t();
  const Vec3 tail = pose.p_t - n_t * length;
  const double dc = region.d_c() + radius;
  const double reach = dc + region.d_0();
  const Vec3 r = Vec3::Constant(reach);
  for (auto i : region.index().query_box(pose.p_t.cwiseMin(tail) - r, pose.p_t.cwiseMax(tail) + r)) {
    const auto near = capsule_nearest(pose.p_t, n_t, length, region.points()[i]);
    const Vec3 diff = near.p_star - region.points()[i];
    const double dist = diff.norm();
    const auto t = barrier_term(dist, dc, region.d_0(), region.gain(i), policy);
    if (!t.active) continue;
    out.V_total += t.V;
    ++out.active_count;
    if (dist <= 0.0) continue;
    const Vec3 f = t.k_v * t.e_norm * (diff / dist);
    out.F_r.head<3>() += f;
    out.F_r.tail<3>() += (near.p_star - pose.p_t).cross(f);
  }
  out.min_distance = nearest_distance(region, pose.p_t, tail);
  return out;
}

enum class ToolMode { kTip, kCapsule };

inline std::string to_string(ToolMode m) { return m == ToolMode::kTip ? "tip" : "capsule"; }

inline ToolMode parse_tool_mode(const std::string& s) {
  if (s == "tip") return ToolMode::kTip;
  if (s == "capsule") return ToolMode::kCapsule;
  throw InputError("mode must be 'tip' or 'capsule', got '" + s + "'");
}

/// Repulsion for either mode; min_distance is measured from the tip (tip mode)
/// or from the shaft axis (capsule mode).
inline RepulsionResult repulsion(ToolMode mode, const ToolPose& pose, const KinematicChain& chain,
                                 const ForbiddenRegion& region,
                                 BarrierPolicy policy = BarrierPolicy::kThrow) {
  if (mode == ToolMode::kTip) return tip_repulsion(pose.p_t, region, policy);
  return capsule_repulsion(pose, chain.tool_length, chain.tool_radius, region, policy);
}

/// Clearance threshold that min_distance must stay above.
inline double clearance_threshold(ToolMode mode, const ForbiddenRegion& region, double tool_radius) {
  return mode == ToolMode::kTip ? region.d_c() : region.d_c() + tool_radius;
}

}  // namespace rcm

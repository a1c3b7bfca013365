#pragma once

#include "rcm_admittance/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rcm {

/// Timestamped human wrench at the end-effector.
struct WrenchSample {
  double t = 0.0;
  Vec6 F_h = Vec6::Zero();
};

struct WrenchCap {
  double force = 200.0;   // N
  double torque = 50.0;   // N m

  bool admits(const Vec6& w) const {
    return w.allFinite() && w.head<3>().norm() <= force && w.tail<3>().norm() <= torque;
  }
};

/// Axes the profile components are expressed in. Tool-frame wrenches follow
/// the tool as it pivots, like a hand gripping the shaft.
enum class WrenchFrame { kBase, kTool };

inline WrenchFrame parse_wrench_frame(const std::string& s) {
  if (s == "base") return WrenchFrame::kBase;
  if (s == "tool") return WrenchFrame::kTool;
  throw InputError("wrench frame must be 'base' or 'tool', got '" + s + "'");
}

inline Vec6 wrench_in_base(const Vec6& w, const Mat3& r_t, WrenchFrame frame) {
  if (frame == WrenchFrame::kBase) return w;
  Vec6 out;
  out << r_t * w.head<3>(), r_t * w.tail<3>();
  return out;
}

/// Piecewise-linear wrench profile; zero outside the sampled range.
class ForceProfile {
 public:
  ForceProfile() = default;

  explicit ForceProfile(std::vector<WrenchSample> samples, WrenchCap cap = {})
      : samples_(std::move(samples)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].t)) throw InputError("profile sample time is not finite", i + 1);
      if (i > 0 && !(samples_[i].t > samples_[i - 1].t)) {
        throw InputError("profile times must be strictly increasing", i + 1);
      }
      if (!cap.admits(samples_[i].F_h)) {
        throw InputError("profile wrench exceeds the sanity cap", i + 1);
      }
    }
  }

  const std::vector<WrenchSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  Vec6 at(double t) const {
    if (samples_.empty() || t < samples_.front().t || t > samples_.back().t) return Vec6::Zero();
    auto hi = std::lower_bound(samples_.begin(), samples_.end(), t,
                               [](const WrenchSample& s, double v) { return s.t < v; });
    if (hi->t == t || hi == samples_.begin()) return hi->F_h;
    auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    return (1.0 - w) * lo->F_h + w * hi->F_h;
  }

 private:
  std::vector<WrenchSample> samples_;
};

/// Text format: one sample per line, `t fx fy fz tx ty tz` (s, N, N m); `#`
/// comments and blank lines are skipped.
inline ForceProfile parse_force_profile(std::istream& in, WrenchCap cap = {}) {
  std::vector<WrenchSample> samples;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw InputError("malformed number '" + tok + "'", lineno);
      vals.push_back(v);
    }
    if (vals.empty()) continue;
    if (vals.size() != 7) {
      throw InputError("expected 't fx fy fz tx ty tz', got " + std::to_string(vals.size()) + " fields", lineno);
    }
    WrenchSample s;
    s.t = vals[0];
    for (int i = 0; i < 6; ++i) s.F_h(i) = vals[static_cast<std::size_t>(i) + 1];
    samples.push_back(s);
    lines.push_back(lineno);
  }
  try {
    return ForceProfile(std::move(samples), cap);
  } catch (const InputError& e) {
    // Re-anchor the sample index to the file line.
    const std::size_t idx = e.line();
    const std::size_t file_line = idx > 0 && idx <= lines.size() ? lines[idx - 1] : 0;
    throw InputError(e.detail(), file_line);
  }
}

inline ForceProfile load_force_profile(const std::string& path, WrenchCap cap = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open force profile '" + path + "'");
  try {
    return parse_force_profile(in, cap);
  } catch (const InputError& e) {
    throw InputError(e.detail(), e.line(), path);
  }
}

inline void write_force_profile(std::ostream& out, const ForceProfile& profile) {
  out << "# t fx fy fz tx ty tz\n";
  out.precision(17);
  for (const auto& s : profile.samples()) {
    out << s.t;
    for (int i = 0; i < 6; ++i) out << ' ' << s.F_h(i);
    out << '\n';
  }
}

/// Keyframe builder for scripted profiles. Each segment ramps linearly from
/// the current wrench to the target over `duration`, or holds it.
class ProfileBuilder {
 public:
  explicit ProfileBuilder(double t0 = 0.0, double cap_force = 30.0, double cap_torque = 5.0)
      : cap_force_(cap_force), cap_torque_(cap_torque) {
    samples_.push_back({t0, Vec6::Zero()});
  }

  ProfileBuilder& ramp_to(const Vec6& target, double duration) {
    Vec6 w = target;
    const double fn = w.head<3>().norm();
    const double tn = w.tail<3>().norm();
    if (fn > cap_force_) w.head<3>() *= cap_force_ / fn;
    if (tn > cap_torque_) w.tail<3>() *= cap_torque_ / tn;
    samples_.push_back({samples_.back().t + duration, w});
    return *this;
  }

  ProfileBuilder& hold(double duration) {
    if (duration <= 0.0) return *this;
    return ramp_to(samples_.back().F_h, duration);
  }

  /// Force-only convenience.
  ProfileBuilder& force_to(const Vec3& f, double duration) {
    Vec6 w = Vec6::Zero();
    w.head<3>() = f;
    return ramp_to(w, duration);
  }

  /// Triangle pulse: ramp to `f` then back to zero, each over half the duration.
  ProfileBuilder& pulse(const Vec3& f, double duration) {
    force_to(f, 0.5 * duration);
    return force_to(Vec3::Zero(), 0.5 * duration);
  }

  double end_time() const { return samples_.back().t; }
  ForceProfile build() const { return ForceProfile(samples_); }

 private:
  double cap_force_;
  double cap_torque_;
  std::vector<WrenchSample> samples_;
};

/// Push along `direction` with a light approach force, ramp to `peak` and
/// hold it, then release and back off. Magnitudes are capped at 30 N.
struct PressArchetype {
  Vec3 direction = -Vec3::UnitZ();
  double approach_force = 0.8;
  double peak_force = 30.0;
  double t_rest = 1.0;
  double t_approach = 4.0;
  double t_ramp = 2.0;
  double t_hold = 6.0;
  double t_release = 2.0;
  double retreat_force = 0.5;
  double t_retreat = 1.0;
  double t_tail = 1.0;

  ForceProfile build() const {
    const Vec3 n = direction.normalized();
    ProfileBuilder b;
    b.hold(t_rest)
        .force_to(n * approach_force, 0.5)
        .hold(t_approach)
        .force_to(n * peak_force, t_ramp)
        .hold(t_hold)
        .force_to(Vec3::Zero(), t_release)
        .force_to(-n * retreat_force, 0.25)
        .hold(t_retreat)
        .force_to(Vec3::Zero(), 0.25)
        .hold(t_tail);
    return b.build();
  }
};

}  // namespace rcm

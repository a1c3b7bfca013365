#pragma once

#include "rcm_admittance/admittance.hpp"
#include "rcm_admittance/force_profile.hpp"
#include "rcm_admittance/kinematics.hpp"
#include "rcm_admittance/point_cloud.hpp"
#include "rcm_admittance/potential_field.hpp"
#include "rcm_admittance/trace.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace rcm {

/// Where the human wrench comes from in batch runs.
struct ForceSpec {
  enum class Kind { kNone, kFile, kKeyframes, kPress };
  Kind kind = Kind::kNone;
  std::string file;
  std::vector<WrenchSample> keyframes;
  PressArchetype press;
  WrenchFrame frame = WrenchFrame::kBase;
};

struct RegionSpec {
  std::optional<std::string> file;
  std::vector<TubeSpec> tubes;
  RegionParams params;
};

struct ScenarioSpec {
  std::string name = "hold";
  ToolMode mode = ToolMode::kTip;
  double duration = 2.0;
  std::optional<VecX> q0;
  std::optional<VecX> q_dot0;
  double alignment_tol = 2e-3;
  std::uint64_t seed = 0;
  std::optional<double> joint_lag_tau;
  WrenchCap cap;
  ForceSpec force;
  MonitorThresholds thresholds;
};

/// Full (weighted) matrix, diagonal or scalar multiple of identity.
struct WeightSpec {
  std::optional<double> scalar = 1.5;
  std::optional<VecX> diagonal;
  std::optional<MatX> full;

  MatX resolve(Eigen::Index n) const {
    if (full) return *full;
    if (diagonal) return diagonal->asDiagonal();
    return *scalar * MatX::Identity(n, n);
  }
};

struct ControllerSpec {
  double alpha = 25.0;
  double beta = 25.0;
  double dt = 0.004;
  WeightSpec W;
  std::optional<VecX> D_c;
  std::optional<Eigen::Vector4d> Q, M, G, C;
  Integrator integrator = Integrator::kExplicitEuler;
};

struct Config {
  KinematicChain chain = default_lwr_chain();
  ControllerSpec controller;
  Vec3 p_c = Vec3(-0.6053, -0.2203, 0.0);
  RegionSpec region;
  ScenarioSpec scenario;
  std::vector<std::string> sources;  // files merged into this config, in order

  /// Gains resolved against the chain's dof. Throws InputError.
  AdmittanceConfig admittance() const {
    const Eigen::Index n = chain.dof();
    AdmittanceConfig c = AdmittanceConfig::defaults(n);
    c.alpha = controller.alpha;
    c.beta = controller.beta;
    c.dt = controller.dt;
    c.integrator = controller.integrator;
    c.W = controller.W.resolve(n);
    if (controller.D_c) c.damping.D_c = *controller.D_c;
    if (controller.Q) c.damping.Q = *controller.Q;
    if (controller.M) c.damping.M = *controller.M;
    if (controller.G) c.damping.G = *controller.G;
    if (controller.C) c.damping.C = *controller.C;
    c.validate(n);
    return c;
  }

  VecX q0() const {
    if (scenario.q0) return *scenario.q0;
    throw InputError("scenario.q0_deg is required");
  }
};

namespace detail {

inline constexpr double kDeg = std::numbers::pi / 180.0;

class YamlReader {
 public:
  YamlReader(std::string source, std::filesystem::path base_dir)
      : source_(std::move(source)), base_dir_(std::move(base_dir)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const auto mark = n.Mark();
    throw InputError(msg, mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0, source_);
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& path) const {
    if (!map.IsMap()) fail(map, path + " must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + path);
    }
  }

  double number(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, path + " must be a number");
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) fail(n, path + " must be finite");
      return v;
    } catch (const YAML::Exception&) {
      fail(n, path + " must be a number, got '" + n.Scalar() + "'");
    }
  }

  double positive(const YAML::Node& n, const std::string& path) const {
    const double v = number(n, path);
    if (!(v > 0.0)) fail(n, path + " must be > 0");
    return v;
  }

  double non_negative(const YAML::Node& n, const std::string& path) const {
    const double v = number(n, path);
    if (!(v >= 0.0)) fail(n, path + " must be >= 0");
    return v;
  }

  std::string text(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, path + " must be a string");
    return n.Scalar();
  }

  std::uint64_t unsigned_int(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, path + " must be a non-negative integer");
    try {
      return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(n, path + " must be a non-negative integer, got '" + n.Scalar() + "'");
    }
  }

  VecX vector(const YAML::Node& n, const std::string& path, Eigen::Index expected = -1) const {
    if (!n.IsSequence()) fail(n, path + " must be a list of numbers");
    if (expected >= 0 && static_cast<Eigen::Index>(n.size()) != expected) {
      fail(n, path + " must have " + std::to_string(expected) + " entries, got " +
                  std::to_string(n.size()));
    }
    VecX v(static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = number(n[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
  }

  Vec3 vec3(const YAML::Node& n, const std::string& path) const { return vector(n, path, 3); }

  Eigen::Vector4d vec4(const YAML::Node& n, const std::string& path, bool non_neg) const {
    Eigen::Vector4d v = vector(n, path, 4);
    if (non_neg && !(v.array() >= 0.0).all()) fail(n, path + " entries must be >= 0");
    return v;
  }

  std::string path(const YAML::Node& n, const std::string& key) const {
    std::filesystem::path p(text(n, key));
    if (p.is_relative()) p = base_dir_ / p;
    return p.lexically_normal().string();
  }

  /// {xyz: [..], rpy_deg: [..]}; rpy is fixed-axis roll, pitch, yaw.
  Iso3 transform(const YAML::Node& n, const std::string& path) const {
    check_keys(n, {"xyz", "rpy_deg"}, path);
    Iso3 t = Iso3::Identity();
    if (n["xyz"]) t.translation() = vec3(n["xyz"], path + ".xyz");
    if (n["rpy_deg"]) {
      const Vec3 rpy = vec3(n["rpy_deg"], path + ".rpy_deg") * kDeg;
      t.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                    Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                    Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                       .toRotationMatrix();
    }
    return t;
  }

  std::pair<double, double> limits(const YAML::Node& n, const std::string& path) const {
    const VecX l = vector(n, path, 2) * kDeg;
    if (!(l(0) < l(1))) fail(n, path + ": lower limit must be < upper");
    return {l(0), l(1)};
  }

  void apply(const YAML::Node& root, Config& cfg) const {
    if (!root || root.IsNull()) return;
    check_keys(root, {"chain", "tool", "controller", "port", "region", "scenario"}, "top level");
    if (root["chain"]) apply_chain(root["chain"], cfg);
    if (root["tool"]) apply_tool(root["tool"], cfg);
    if (root["controller"]) apply_controller(root["controller"], cfg.controller);
    if (root["port"]) {
      check_keys(root["port"], {"p_c"}, "port");
      if (root["port"]["p_c"]) cfg.p_c = vec3(root["port"]["p_c"], "port.p_c");
    }
    if (root["region"]) apply_region(root["region"], cfg.region);
    if (root["scenario"]) apply_scenario(root["scenario"], cfg);
  }

 private:
  void apply_chain(const YAML::Node& n, Config& cfg) const {
    check_keys(n, {"dh", "joints", "base", "flange"}, "chain");
    if (n["dh"] && n["joints"]) fail(n, "chain: give either dh or joints, not both");
    const double length = cfg.chain.tool_length;
    const double radius = cfg.chain.tool_radius;
    if (n["dh"]) {
      const auto& rows = n["dh"];
      if (!rows.IsSequence()) fail(rows, "chain.dh must be a list");
      std::vector<DhRow> dh;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string p = "chain.dh[" + std::to_string(i) + "]";
        check_keys(rows[i], {"a", "alpha_deg", "d", "limits_deg"}, p);
        DhRow row;
        if (rows[i]["a"]) row.a = number(rows[i]["a"], p + ".a");
        if (rows[i]["alpha_deg"]) row.alpha = number(rows[i]["alpha_deg"], p + ".alpha_deg") * kDeg;
        if (rows[i]["d"]) row.d = number(rows[i]["d"], p + ".d");
        if (!rows[i]["limits_deg"]) fail(rows[i], p + ".limits_deg is required");
        std::tie(row.lower, row.upper) = limits(rows[i]["limits_deg"], p + ".limits_deg");
        dh.push_back(row);
      }
      if (dh.size() < 6) fail(rows, "chain.dh: at least 6 joints required, got " + std::to_string(dh.size()));
      const Iso3 base = cfg.chain.base;
      cfg.chain = KinematicChain::from_dh(dh, length, radius);
      cfg.chain.base = base;
    }
    if (n["joints"]) {
      const auto& js = n["joints"];
      if (!js.IsSequence()) fail(js, "chain.joints must be a list");
      std::vector<RevoluteJoint> joints;
      for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string p = "chain.joints[" + std::to_string(i) + "]";
        check_keys(js[i], {"origin", "axis", "limits_deg"}, p);
        RevoluteJoint j;
        if (js[i]["origin"]) j.origin = transform(js[i]["origin"], p + ".origin");
        if (js[i]["axis"]) {
          const Vec3 a = vec3(js[i]["axis"], p + ".axis");
          if (!(a.norm() > 0.0)) fail(js[i]["axis"], p + ".axis must be non-zero");
          j.axis = a.normalized();
        }
        if (!js[i]["limits_deg"]) fail(js[i], p + ".limits_deg is required");
        std::tie(j.lower, j.upper) = limits(js[i]["limits_deg"], p + ".limits_deg");
        joints.push_back(j);
      }
      if (joints.size() < 6) {
        fail(js, "chain.joints: at least 6 joints required, got " + std::to_string(joints.size()));
      }
      cfg.chain.joints = std::move(joints);
      cfg.chain.flange = Iso3::Identity();
    }
    if (n["base"]) cfg.chain.base = transform(n["base"], "chain.base");
    if (n["flange"]) cfg.chain.flange = transform(n["flange"], "chain.flange");
  }

  void apply_tool(const YAML::Node& n, Config& cfg) const {
    check_keys(n, {"length", "radius", "offset"}, "tool");
    if (n["length"]) {
      cfg.chain.tool_length = positive(n["length"], "tool.length");
      cfg.chain.tool_offset = Iso3::Identity();
      cfg.chain.tool_offset.translate(Vec3(0.0, 0.0, cfg.chain.tool_length));
    }
    if (n["radius"]) cfg.chain.tool_radius = non_negative(n["radius"], "tool.radius");
    if (n["offset"]) cfg.chain.tool_offset = transform(n["offset"], "tool.offset");
  }

  void apply_controller(const YAML::Node& n, ControllerSpec& c) const {
    check_keys(n, {"alpha", "beta", "dt", "rate_hz", "W", "integrator", "damping"}, "controller");
    if (n["alpha"]) c.alpha = positive(n["alpha"], "controller.alpha");
    if (n["beta"]) c.beta = positive(n["beta"], "controller.beta");
    if (n["dt"]) c.dt = positive(n["dt"], "controller.dt");
    if (n["rate_hz"]) {
      const double dt = 1.0 / positive(n["rate_hz"], "controller.rate_hz");
      if (n["dt"] && std::abs(dt - c.dt) > 1e-12) fail(n["rate_hz"], "controller.rate_hz disagrees with controller.dt");
      c.dt = dt;
    }
    if (n["W"]) {
      const auto& w = n["W"];
      WeightSpec spec;
      spec.scalar.reset();
      if (w.IsScalar()) {
        spec.scalar = positive(w, "controller.W");
      } else if (w.IsSequence() && w.size() > 0 && w[0].IsSequence()) {
        MatX m(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.size()));
        for (std::size_t i = 0; i < w.size(); ++i) {
          m.row(static_cast<Eigen::Index>(i)) =
              vector(w[i], "controller.W[" + std::to_string(i) + "]", m.cols()).transpose();
        }
        if (!m.isApprox(m.transpose(), 1e-12)) fail(w, "controller.W must be symmetric");
        Eigen::SelfAdjointEigenSolver<MatX> eig(m);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) fail(w, "controller.W must be positive definite");
        spec.full = m;
      } else {
        const VecX d = vector(w, "controller.W");
        if (!(d.array() > 0.0).all()) fail(w, "controller.W diagonal entries must be > 0");
        spec.diagonal = d;
      }
      c.W = spec;
    }
    if (n["integrator"]) {
      const auto s = text(n["integrator"], "controller.integrator");
      if (s == "explicit_euler") c.integrator = Integrator::kExplicitEuler;
      else if (s == "semi_implicit_euler") c.integrator = Integrator::kSemiImplicitEuler;
      else fail(n["integrator"], "controller.integrator must be explicit_euler or semi_implicit_euler");
    }
    if (n["damping"]) {
      const auto& d = n["damping"];
      check_keys(d, {"D_c", "Q", "M", "G", "C"}, "controller.damping");
      if (d["D_c"]) {
        const VecX dc = vector(d["D_c"], "controller.damping.D_c");
        if (!(dc.array() > 0.0).all()) fail(d["D_c"], "controller.damping.D_c entries must be > 0");
        c.D_c = dc;
      }
      if (d["Q"]) c.Q = vec4(d["Q"], "controller.damping.Q", true);
      if (d["M"]) c.M = vec4(d["M"], "controller.damping.M", true);
      if (d["G"]) c.G = vec4(d["G"], "controller.damping.G", true);
      if (d["C"]) c.C = vec4(d["C"], "controller.damping.C", true);
    }
  }

  void apply_region(const YAML::Node& n, RegionSpec& r) const {
    check_keys(n, {"file", "tubes", "d_c", "density", "d_0", "k", "voxel", "forbidden_labels"}, "region");
    if (n["file"] && n["tubes"]) fail(n, "region: give either file or tubes, not both");
    if (n["file"]) {
      r.file = path(n["file"], "region.file");
      r.tubes.clear();
    }
    if (n["tubes"]) {
      const auto& ts = n["tubes"];
      if (!ts.IsSequence()) fail(ts, "region.tubes must be a list");
      r.file.reset();
      r.tubes.clear();
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const std::string p = "region.tubes[" + std::to_string(i) + "]";
        check_keys(ts[i], {"center", "axis", "radius", "length", "spacing", "count", "step", "jitter"}, p);
        TubeSpec t;
        if (!ts[i]["center"]) fail(ts[i], p + ".center is required");
        t.center = vec3(ts[i]["center"], p + ".center");
        if (ts[i]["axis"]) t.axis = vec3(ts[i]["axis"], p + ".axis");
        if (!(t.axis.norm() > 0.0)) fail(ts[i], p + ".axis must be non-zero");
        if (ts[i]["radius"]) t.radius = non_negative(ts[i]["radius"], p + ".radius");
        if (ts[i]["length"]) t.length = non_negative(ts[i]["length"], p + ".length");
        if (ts[i]["spacing"]) t.spacing = positive(ts[i]["spacing"], p + ".spacing");
        if (ts[i]["count"]) {
          t.count = static_cast<int>(unsigned_int(ts[i]["count"], p + ".count"));
          if (t.count < 1) fail(ts[i]["count"], p + ".count must be >= 1");
        }
        if (ts[i]["step"]) t.step = vec3(ts[i]["step"], p + ".step");
        if (ts[i]["jitter"]) t.jitter = non_negative(ts[i]["jitter"], p + ".jitter");
        r.tubes.push_back(t);
      }
    }
    if (n["d_c"]) {
      r.params.d_c = positive(n["d_c"], "region.d_c");
      r.params.rho.reset();
    }
    if (n["density"]) {
      if (n["d_c"]) fail(n, "region: give either d_c or density, not both");
      r.params.rho = positive(n["density"], "region.density");
      r.params.d_c.reset();
    }
    if (n["d_0"]) r.params.d_0 = positive(n["d_0"], "region.d_0");
    if (n["k"]) r.params.k = positive(n["k"], "region.k");
    if (n["voxel"]) r.params.voxel = positive(n["voxel"], "region.voxel");
    if (n["forbidden_labels"]) {
      const auto& l = n["forbidden_labels"];
      if (!l.IsSequence()) fail(l, "region.forbidden_labels must be a list");
      r.params.forbidden_labels.clear();
      for (std::size_t i = 0; i < l.size(); ++i) {
        r.params.forbidden_labels.insert(text(l[i], "region.forbidden_labels"));
      }
    }
  }

  void apply_force(const YAML::Node& n, ForceSpec& f) const {
    check_keys(n, {"frame", "file", "keyframes", "press"}, "scenario.force");
    const int sources = (n["file"] ? 1 : 0) + (n["keyframes"] ? 1 : 0) + (n["press"] ? 1 : 0);
    if (sources > 1) fail(n, "scenario.force: give one of file, keyframes or press");
    if (n["frame"]) {
      const auto s = text(n["frame"], "scenario.force.frame");
      if (s != "base" && s != "tool") fail(n["frame"], "scenario.force.frame must be base or tool");
      f.frame = parse_wrench_frame(s);
    }
    if (n["file"]) {
      f.kind = ForceSpec::Kind::kFile;
      f.file = path(n["file"], "scenario.force.file");
    }
    if (n["keyframes"]) {
      const auto& ks = n["keyframes"];
      if (!ks.IsSequence()) fail(ks, "scenario.force.keyframes must be a list");
      f.kind = ForceSpec::Kind::kKeyframes;
      f.keyframes.clear();
      for (std::size_t i = 0; i < ks.size(); ++i) {
        const VecX row = vector(ks[i], "scenario.force.keyframes[" + std::to_string(i) + "]", 7);
        WrenchSample s;
        s.t = row(0);
        s.F_h = row.tail<6>();
        if (i > 0 && !(s.t > f.keyframes.back().t)) {
          fail(ks[i], "scenario.force.keyframes times must be strictly increasing");
        }
        f.keyframes.push_back(s);
      }
    }
    if (n["press"]) {
      const auto& p = n["press"];
      check_keys(p, {"direction", "approach_force", "peak_force", "t_rest", "t_approach", "t_ramp",
                     "t_hold", "t_release", "retreat_force", "t_retreat", "t_tail"},
                 "scenario.force.press");
      f.kind = ForceSpec::Kind::kPress;
      auto& a = f.press;
      if (p["direction"]) {
        a.direction = vec3(p["direction"], "scenario.force.press.direction");
        if (!(a.direction.norm() > 0.0)) fail(p["direction"], "scenario.force.press.direction must be non-zero");
      }
      const std::pair<const char*, double*> fields[] = {
          {"approach_force", &a.approach_force}, {"peak_force", &a.peak_force},
          {"t_rest", &a.t_rest},                 {"t_approach", &a.t_approach},
          {"t_ramp", &a.t_ramp},                 {"t_hold", &a.t_hold},
          {"t_release", &a.t_release},           {"retreat_force", &a.retreat_force},
          {"t_retreat", &a.t_retreat},           {"t_tail", &a.t_tail}};
      for (const auto& [key, dst] : fields) {
        if (p[key]) *dst = non_negative(p[key], std::string("scenario.force.press.") + key);
      }
      if (a.peak_force > 30.0) fail(p["peak_force"], "scenario.force.press.peak_force is capped at 30 N");
    }
  }

  void apply_scenario(const YAML::Node& n, Config& cfg) const {
    check_keys(n, {"name", "mode", "duration", "q0_deg", "q_dot0_deg_s", "alignment_tol", "seed",
                   "joint_lag_tau", "wrench_cap", "force", "thresholds"},
               "scenario");
    auto& s = cfg.scenario;
    if (n["name"]) s.name = text(n["name"], "scenario.name");
    if (n["mode"]) {
      const auto m = text(n["mode"], "scenario.mode");
      if (m != "tip" && m != "capsule") fail(n["mode"], "scenario.mode must be tip or capsule");
      s.mode = parse_tool_mode(m);
    }
    if (n["duration"]) s.duration = positive(n["duration"], "scenario.duration");
    if (n["q0_deg"]) s.q0 = vector(n["q0_deg"], "scenario.q0_deg") * kDeg;
    if (n["q_dot0_deg_s"]) s.q_dot0 = vector(n["q_dot0_deg_s"], "scenario.q_dot0_deg_s") * kDeg;
    if (n["alignment_tol"]) s.alignment_tol = positive(n["alignment_tol"], "scenario.alignment_tol");
    if (n["seed"]) s.seed = unsigned_int(n["seed"], "scenario.seed");
    if (n["joint_lag_tau"]) s.joint_lag_tau = positive(n["joint_lag_tau"], "scenario.joint_lag_tau");
    if (n["wrench_cap"]) {
      check_keys(n["wrench_cap"], {"force", "torque"}, "scenario.wrench_cap");
      if (n["wrench_cap"]["force"]) s.cap.force = positive(n["wrench_cap"]["force"], "scenario.wrench_cap.force");
      if (n["wrench_cap"]["torque"]) s.cap.torque = positive(n["wrench_cap"]["torque"], "scenario.wrench_cap.torque");
    }
    if (n["force"]) apply_force(n["force"], s.force);
    if (n["thresholds"]) {
      const auto& t = n["thresholds"];
      check_keys(t, {"rcm_tol", "slack_tol", "residual_tol"}, "scenario.thresholds");
      if (t["rcm_tol"]) s.thresholds.rcm_tol = positive(t["rcm_tol"], "scenario.thresholds.rcm_tol");
      if (t["slack_tol"]) s.thresholds.slack_tol = non_negative(t["slack_tol"], "scenario.thresholds.slack_tol");
      if (t["residual_tol"]) s.thresholds.residual_tol = positive(t["residual_tol"], "scenario.thresholds.residual_tol");
    }
  }

  std::string source_;
  std::filesystem::path base_dir_;
};

inline YAML::Node parse_yaml(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw InputError(e.msg, e.mark.line >= 0 ? static_cast<std::size_t>(e.mark.line) + 1 : 0, source);
  }
}

}  // namespace detail

/// Merges one YAML document into `cfg`. Keys present override, absent keys
/// keep their current value. Relative paths resolve against `base_dir`.
inline void apply_config_text(Config& cfg, const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir = ".") {
  const detail::YamlReader reader(source, base_dir);
  reader.apply(detail::parse_yaml(text, source), cfg);
  cfg.sources.push_back(source);
}

inline void apply_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open configuration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path, std::filesystem::path(path).parent_path());
}

/// Base configuration, optionally overlaid with a scenario file.
inline Config load_config(const std::string& config_path, const std::string& scenario_path = {}) {
  Config cfg;
  apply_config_file(cfg, config_path);
  if (!scenario_path.empty()) apply_config_file(cfg, scenario_path);
  cfg.chain.validate();
  return cfg;
}

inline Config parse_config(const std::string& text, const std::string& source = "<config>") {
  Config cfg;
  apply_config_text(cfg, text, source);
  cfg.chain.validate();
  return cfg;
}

inline ForbiddenRegion build_region(const RegionSpec& spec, std::uint64_t seed) {
  if (spec.file) return load_point_cloud(*spec.file, spec.params);
  if (spec.tubes.empty()) throw InputError("region needs a file or at least one tube");
  PointCloudFile cloud;
  cloud.forbidden = generate_tubes(spec.tubes, seed);
  cloud.gains.assign(cloud.forbidden.size(), std::numeric_limits<double>::quiet_NaN());
  return make_region(std::move(cloud), spec.params);
}

inline ForceProfile build_force_profile(const ForceSpec& spec, const WrenchCap& cap) {
  switch (spec.kind) {
    case ForceSpec::Kind::kNone:
      return ForceProfile({}, cap);
    case ForceSpec::Kind::kFile:
      return load_force_profile(spec.file, cap);
    case ForceSpec::Kind::kKeyframes:
      return ForceProfile(spec.keyframes, cap);
    case ForceSpec::Kind::kPress:
      return ForceProfile(spec.press.build().samples(), cap);
  }
  return {};
}

}  // namespace rcm

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcm {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Iso3 = Eigen::Isometry3d;

// Error hierarchy. Every failure the library reports derives from rcm::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Jacobian or an inner Gram matrix is too ill-conditioned to invert.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// A point of the tool reached a covering sphere of the forbidden region.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// Malformed configuration, point cloud, profile or trace input. `line` is
// 1-based, 0 when not tied to a line.
class InputError : public Error {
 public:
  InputError(const std::string& what, std::size_t line = 0, const std::string& source = {})
      : Error(prefix(line, source) + what), detail_(what), line_(line), source_(source) {}
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }
  // Message without the location prefix.
  const std::string& detail() const { return detail_; }

 private:
  static std::string prefix(std::size_t line, const std::string& source) {
    if (!source.empty()) return source + (line > 0 ? ":" + std::to_string(line) : "") + ": ";
    return line > 0 ? "line " + std::to_string(line) + ": " : "";
  }

  std::string detail_;
  std::size_t line_;
  std::string source_;
};

/// Skew-symmetric matrix so that skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Wrench transfer [I 0; r^ I]: moves a force applied at a point offset by r
/// into a force/torque pair about the reference point.
inline Mat6 wrench_transfer(const Vec3& r) {
  Mat6 t = Mat6::Identity();
  t.block<3, 3>(3, 0) = skew(r);
  return t;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline void require_size(Eigen::Index actual, Eigen::Index expected, const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected size " + std::to_string(expected) +
                         ", got " + std::to_string(actual));
  }
}

}  // namespace rcm

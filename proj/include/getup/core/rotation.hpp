#pragma once

#include <algorithm>
#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

namespace getup {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  // remainder maps odd multiples of pi to -pi or pi depending on rounding;
  // keep pi as pi so the range is [-pi, pi].
  return a;
}

// Trunk orientation convention: R = Rz(yaw) * Rx(roll) * Ry(pitch).
// Pitch is the innermost rotation about the trunk's lateral axis, so it
// spans the full circle (face down = +pi/2, face up = -pi/2, head down = pi)
// while roll stays in [-pi/2, pi/2].
inline Mat3 rpy_to_matrix(const Vec3& rpy) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(rpy.z(), Vec3::UnitZ()) * AngleAxisd(rpy.x(), Vec3::UnitX()) *
          AngleAxisd(rpy.y(), Vec3::UnitY()))
      .toRotationMatrix();
}

inline Vec3 matrix_to_rpy(const Mat3& r) {
  const double roll = std::asin(std::clamp(r(2, 1), -1.0, 1.0));
  const double pitch = std::atan2(-r(2, 0), r(2, 2));
  const double yaw = std::atan2(-r(0, 1), r(1, 1));
  return {roll, pitch, yaw};
}

}  // namespace getup

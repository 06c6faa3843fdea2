#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace transgen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Linear radiance, nominally in [0, 1] per channel.
using Rgb = Eigen::Vector3d;

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) noexcept { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) noexcept { return rad * (180.0 / kPi); }

}  // namespace transgen

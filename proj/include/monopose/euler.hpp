#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

#include "monopose/camera.hpp"

namespace monopose {

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * Scalar(M_PI) / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / Scalar(M_PI);
}

/// Fixed-axis x-y-z angles in degrees: R = Rz(gamma) * Ry(beta) * Rx(alpha).
template <typename Scalar>
struct EulerAngles {
  Scalar alpha_deg;  ///< about x
  Scalar beta_deg;   ///< about y
  Scalar gamma_deg;  ///< about z
  bool gimbal_lock = false;

  Vector3<Scalar> vec() const { return {alpha_deg, beta_deg, gamma_deg}; }
};

using EulerAnglesd = EulerAngles<double>;

/// Composes a rotation from fixed-axis x-y-z angles (degrees).
template <typename Scalar>
Matrix3<Scalar> rotation_from_euler(Scalar alpha_deg, Scalar beta_deg, Scalar gamma_deg) {
  const Scalar a = deg_to_rad(alpha_deg);
  const Scalar b = deg_to_rad(beta_deg);
  const Scalar g = deg_to_rad(gamma_deg);
  return (Eigen::AngleAxis<Scalar>(g, Vector3<Scalar>::UnitZ()) *
          Eigen::AngleAxis<Scalar>(b, Vector3<Scalar>::UnitY()) *
          Eigen::AngleAxis<Scalar>(a, Vector3<Scalar>::UnitX()))
      .toRotationMatrix();
}

template <typename Scalar>
Matrix3<Scalar> rotation_from_euler(const Vector3<Scalar>& abg_deg) {
  return rotation_from_euler(abg_deg.x(), abg_deg.y(), abg_deg.z());
}

/// Extracts fixed-axis x-y-z angles. Inverse of rotation_from_euler away
/// from gimbal lock (|beta| = 90 deg), where the flag is set and alpha is
/// forced to zero.
template <typename Scalar>
EulerAngles<Scalar> rotation_to_euler(const Matrix3<Scalar>& r) {
  EulerAngles<Scalar> e;
  const Scalar sin_beta = -r(2, 0);
  const Scalar beta = std::asin(std::clamp(sin_beta, Scalar(-1), Scalar(1)));
  e.gimbal_lock = std::abs(std::abs(sin_beta) - Scalar(1)) < Scalar(1e-6);
  if (e.gimbal_lock) {
    // alpha and gamma are coupled; keep the combined angle in gamma.
    e.alpha_deg = Scalar(0);
    e.beta_deg = rad_to_deg(beta);
    e.gamma_deg = rad_to_deg(std::atan2(-r(0, 1), r(1, 1)));
    return e;
  }
  e.alpha_deg = rad_to_deg(std::atan2(r(2, 1), r(2, 2)));
  e.beta_deg = rad_to_deg(beta);
  e.gamma_deg = rad_to_deg(std::atan2(r(1, 0), r(0, 0)));
  return e;
}

/// Per-axis angular difference between two rotations, in degrees: the
/// fixed-axis decomposition of est * truth^T. Zero when they agree.
template <typename Scalar>
Vector3<Scalar> rotation_error_deg(const Matrix3<Scalar>& est, const Matrix3<Scalar>& truth) {
  return rotation_to_euler<Scalar>(est * truth.transpose()).vec();
}

/// Angle between two directions in degrees, insensitive to vector length.
/// The atan2 form stays accurate for nearly parallel vectors, where acos of
/// the dot product floors out around 1e-6 degrees.
template <typename Scalar>
Scalar angle_between_deg(const Vector3<Scalar>& a, const Vector3<Scalar>& b) {
  const Vector3<Scalar> an = a.normalized();
  const Vector3<Scalar> bn = b.normalized();
  return rad_to_deg(std::atan2(an.cross(bn).norm(), an.dot(bn)));
}

}  // namespace monopose

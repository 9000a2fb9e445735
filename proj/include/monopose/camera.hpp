#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "monopose/errors.hpp"

namespace monopose {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Pinhole intrinsics. Focal length and pixel pitch share one length unit
/// (millimetres in the calibration file format); the principal point is in
/// pixels. No skew, no distortion -- inputs are assumed pre-undistorted.
template <typename Scalar>
struct CameraIntrinsics {
  Scalar f;            ///< focal length
  Scalar s_x, s_y;     ///< pixel pitch, same unit as f
  Scalar c_x, c_y;     ///< principal point [px]

  bool valid() const {
    return f > Scalar(0) && s_x > Scalar(0) && s_y > Scalar(0) &&
           std::isfinite(c_x) && std::isfinite(c_y);
  }
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

/// One image measurement, pixel coordinates (u, v).
template <typename Scalar>
using PixelPoint = Vector2<Scalar>;

/// Line of sight through a pixel: k is the z=1 ray, n the unit direction.
template <typename Scalar>
struct Ray {
  Vector3<Scalar> k;  ///< (x, y, 1), z fixed by construction
  Vector3<Scalar> n;  ///< k / |k|
};

/// Scalar conversion factor between pixel lengths and normalized-plane
/// lengths, using the mean pitch (exact for square pixels).
template <typename Scalar>
Scalar normalized_per_pixel(const CameraIntrinsics<Scalar>& intr) {
  return (intr.s_x + intr.s_y) / (Scalar(2) * intr.f);
}

/// Lifts a pixel to its line of sight. Defined for any finite pixel, on or
/// off the sensor.
template <typename Scalar>
Ray<Scalar> lift(const CameraIntrinsics<Scalar>& intr, const PixelPoint<Scalar>& p) {
  Ray<Scalar> r;
  r.k = Vector3<Scalar>((p.x() - intr.c_x) * intr.s_x / intr.f,
                        (p.y() - intr.c_y) * intr.s_y / intr.f, Scalar(1));
  r.n = r.k.normalized();
  return r;
}

/// Projects a camera-frame point onto the image. Inverse of lift up to the
/// positive scale lost in projection.
template <typename Scalar>
PixelPoint<Scalar> project(const CameraIntrinsics<Scalar>& intr, const Vector3<Scalar>& point) {
  if (!(point.z() > Scalar(0))) {
    throw NonPositiveDepth("project: point depth must be positive");
  }
  const Scalar x_m = intr.f * point.x() / point.z();
  const Scalar y_m = intr.f * point.y() / point.z();
  return PixelPoint<Scalar>(x_m / intr.s_x + intr.c_x, y_m / intr.s_y + intr.c_y);
}

/// Depth beyond which an observable motion of magnitude t_m shifts the image
/// by less than one pixel; such points constrain only the rotation. Uses the
/// smaller pitch when pixels are not square.
template <typename Scalar>
Scalar z_infinity(const CameraIntrinsics<Scalar>& intr, Scalar t_m) {
  return intr.f / std::min(intr.s_x, intr.s_y) * t_m;
}

/// Motion component observable in the image, delta_t * cos(gamma) / cos(phi).
/// gamma is the angle between the motion and the image plane (radial motion,
/// gamma = 90 deg, is unobservable); phi accounts for the viewing obliquity.
template <typename Scalar>
Scalar observable_motion(Scalar delta_t, Scalar gamma, Scalar phi) {
  const Scalar c_phi = std::cos(phi);
  if (std::abs(c_phi) < Scalar(1e-9)) {
    throw DegenerateAngle("observable_motion: cos(phi) vanishes");
  }
  return delta_t * std::cos(gamma) / c_phi;
}

}  // namespace monopose

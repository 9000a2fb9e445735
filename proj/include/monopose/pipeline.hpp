#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "monopose/camera.hpp"
#include "monopose/errors.hpp"
#include "monopose/euler.hpp"
#include "monopose/rotation.hpp"
#include "monopose/track_types.hpp"
#include "monopose/translation.hpp"

namespace monopose {

template <typename Scalar>
struct PipelineConfig {
  RansacConfig<Scalar> ransac;
  Scalar full_confidence_length_px = Scalar(12);  ///< L; flows this long get weight 1
  Scalar min_flow_px = Scalar(0.5);               ///< flows below this are noise
  int min_translation_points = 2;
  /// Tracker accuracy assumed when rejecting epipole-inconsistent flow;
  /// zero turns the rejection off.
  Scalar assumed_track_noise_px = Scalar(0.5);
  /// Optional residual pre-gate: rotation outliers whose residual exceeds
  /// gate * inlier_threshold are dropped before the epipole estimate. Off by
  /// default; genuine close-range parallax routinely exceeds any small
  /// multiple of the rotation threshold, so the epipole-consistency
  /// rejection above is the primary mistrack filter.
  Scalar translation_gate_factor = Scalar(0);

  bool valid() const {
    return ransac.valid() && full_confidence_length_px > Scalar(0) &&
           min_flow_px >= Scalar(0) && min_translation_points >= 2 &&
           assumed_track_noise_px >= Scalar(0);
  }
};

using PipelineConfigd = PipelineConfig<double>;

enum class PoseStatus { Full, RotationOnly };

/// Classification of one input correspondence by the pipeline.
enum class PointClass { RotationInlier, Translation, Rejected };

template <typename Scalar>
struct PoseEstimate {
  PoseStatus status = PoseStatus::RotationOnly;
  Matrix3<Scalar> rotation;
  EulerAngles<Scalar> euler;
  Scalar mean_rotation_residual = Scalar(0);  ///< radians, over rotation inliers
  Scalar mean_residual_normalized = Scalar(0);  ///< same residual as image-plane distance

  std::vector<int> rotation_inliers;
  std::vector<int> rotation_outliers;
  std::vector<int> translation_ids;  ///< subset of the outliers used for the epipole

  /// Translation direction in the frame-B axes convention of the motion
  /// model (the generator's T), unit length. Present iff status == Full.
  std::optional<Vector3<Scalar>> t_dir;
  /// Reported epipole with e = t-direction rescaled to z = 1; covariance and
  /// counts are those of the raw flow-line intersections.
  std::optional<EpipoleEstimate<Scalar>> epipole;
  /// Focus of expansion in the rotation-compensated frame-A image plane.
  std::optional<Vector2<Scalar>> flow_epipole;

  /// Compensated segment per input match; empty where the compensated ray
  /// left the forward image plane.
  std::vector<std::optional<FlowSegment<Scalar>>> flow;
  std::vector<PointClass> classes;  ///< parallel to the input matches
};

using PoseEstimated = PoseEstimate<double>;

/// Two-frame pose estimation: lift the correspondences to bearings, recover
/// the rotation by RANSAC over far points, compensate the remaining flow for
/// that rotation and intersect it for the epipole. Translation degrades to
/// RotationOnly when there is not enough usable parallax; rotation failure
/// raises NoConsensus.
template <typename Scalar>
PoseEstimate<Scalar> estimate_pose(const CameraIntrinsics<Scalar>& intr,
                                   std::span<const FeatureCorrespondence> matches,
                                   const PipelineConfig<Scalar>& cfg) {
  if (!cfg.valid() || !intr.valid()) {
    throw Error("estimate_pose: invalid config or intrinsics");
  }
  std::vector<DirectionPair<Scalar>> pairs;
  pairs.reserve(matches.size());
  for (const auto& match : matches) {
    DirectionPair<Scalar> pair;
    pair.n = lift(intr, PixelPoint<Scalar>(match.a.template cast<Scalar>())).n;
    pair.n_prime = lift(intr, PixelPoint<Scalar>(match.b.template cast<Scalar>())).n;
    pair.id = match.id;
    pairs.push_back(pair);
  }

  const RotationResult<Scalar> rot = estimate_rotation_ransac<Scalar>(pairs, cfg.ransac);

  PoseEstimate<Scalar> pose;
  pose.rotation = rot.rotation;
  pose.euler = rotation_to_euler(rot.rotation);
  pose.mean_rotation_residual = rot.mean_residual;
  pose.mean_residual_normalized = std::tan(rot.mean_residual);
  pose.rotation_inliers = rot.inliers;
  pose.rotation_outliers = rot.outliers;

  const Scalar to_norm = normalized_per_pixel(intr);
  const Scalar min_flow = cfg.min_flow_px * to_norm;
  const Scalar gate = cfg.translation_gate_factor > Scalar(0)
                          ? cfg.translation_gate_factor * cfg.ransac.inlier_threshold
                          : std::numeric_limits<Scalar>::infinity();

  std::vector<FlowSegment<Scalar>> candidates;
  pose.classes.assign(pairs.size(), PointClass::Rejected);
  pose.flow.resize(pairs.size());
  std::size_t next_inlier = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto seg = try_compensate_rotation(rot.rotation, pairs[i]);
    pose.flow[i] = seg;
    if (next_inlier < rot.inliers.size() && rot.inliers[next_inlier] == pairs[i].id) {
      pose.classes[i] = PointClass::RotationInlier;
      ++next_inlier;
      continue;
    }
    if (!seg || seg->length <= min_flow) continue;
    if (rotation_residual(rot.rotation, pairs[i]) > gate) continue;
    candidates.push_back(*seg);
    pose.classes[i] = PointClass::Translation;
  }

  if (static_cast<int>(candidates.size()) < cfg.min_translation_points) {
    return pose;  // RotationOnly: not enough parallax for a translation
  }

  EpipoleConfig<Scalar> epi_cfg;
  epi_cfg.full_confidence_length = cfg.full_confidence_length_px * to_norm;
  epi_cfg.min_flow = min_flow;
  epi_cfg.track_noise = cfg.assumed_track_noise_px * to_norm;
  epi_cfg.rng_seed = cfg.ransac.rng_seed;
  EpipoleEstimate<Scalar> raw;
  try {
    raw = estimate_epipole<Scalar>(candidates, epi_cfg);
  } catch (const InsufficientParallax&) {
    return pose;
  } catch (const AllParallel&) {
    return pose;
  } catch (const AmbiguousSign&) {
    return pose;
  }

  // The intersections live in the compensated frame-A image, where the
  // epipole is the projection of R * T; rotate back to express the
  // translation in the motion-model axes.
  pose.flow_epipole = raw.e.template head<2>();
  const Vector3<Scalar> t_axis = rot.rotation.transpose() * raw.e;
  EpipoleEstimate<Scalar> reported = raw;
  const int flip = t_axis.z() < Scalar(0) ? -1 : 1;
  const Scalar denom =
      Scalar(flip) * std::max(std::abs(t_axis.z()), Scalar(1e-12));
  reported.e = t_axis / denom;
  reported.c = raw.c * flip;
  reported.t_dir = Scalar(reported.c) * reported.e.normalized();
  pose.epipole = reported;
  pose.t_dir = reported.t_dir;
  pose.translation_ids = raw.segment_ids;
  std::sort(pose.translation_ids.begin(), pose.translation_ids.end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pose.classes[i] == PointClass::Translation &&
        !std::binary_search(pose.translation_ids.begin(), pose.translation_ids.end(),
                            pairs[i].id)) {
      pose.classes[i] = PointClass::Rejected;
    }
  }
  pose.status = PoseStatus::Full;
  return pose;
}

}  // namespace monopose

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "monopose/camera.hpp"
#include "monopose/errors.hpp"

namespace monopose {

/// Unit lines of sight to one tracked point in two frames. The motion model
/// for distant points is n_prime = R^T * n with R the camera rotation.
template <typename Scalar>
struct DirectionPair {
  Vector3<Scalar> n;        ///< frame A, unit
  Vector3<Scalar> n_prime;  ///< frame B, unit
  int id = 0;               ///< correspondence index
};

using DirectionPaird = DirectionPair<double>;

template <typename Scalar>
struct RansacConfig {
  Scalar inlier_threshold = Scalar(0.004);  ///< angular residual [rad]
  int max_iterations = 500;
  int min_inliers = 6;
  std::uint64_t rng_seed = 0;
  double confidence = 0.999;  ///< adaptive early-exit bound

  bool valid() const {
    return inlier_threshold > Scalar(0) && max_iterations >= 1 && min_inliers >= 3;
  }
};

using RansacConfigd = RansacConfig<double>;

template <typename Scalar>
struct RotationResult {
  Matrix3<Scalar> rotation;
  std::vector<int> inliers;   ///< ids of rotation-consistent pairs
  std::vector<int> outliers;  ///< ids of translation-affected pairs and mismatches
  Scalar mean_residual = Scalar(0);  ///< mean angular inlier residual [rad]
};

using RotationResultd = RotationResult<double>;

/// Least-squares rotation aligning src onto dst after removing the centroids
/// (the translation component drops out with them): minimizes
/// sum_i w_i |R * (src_i - c_src) - (dst_i - c_dst)|^2 over rotations.
/// Inputs need not be unit vectors. The sign of the last singular vector is
/// fixed so the result is a proper rotation, det = +1.
template <typename Scalar>
Matrix3<Scalar> align_rotation(std::span<const Vector3<Scalar>> src,
                               std::span<const Vector3<Scalar>> dst,
                               std::span<const Scalar> weights = {}) {
  if (src.size() != dst.size() || (!weights.empty() && weights.size() != src.size())) {
    throw InsufficientPoints("align_rotation: size mismatch");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw InsufficientPoints("align_rotation: need at least 3 point pairs");
  }

  Vector3<Scalar> c_src = Vector3<Scalar>::Zero();
  Vector3<Scalar> c_dst = Vector3<Scalar>::Zero();
  Scalar w_sum = Scalar(0);
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar w = weights.empty() ? Scalar(1) : weights[i];
    c_src += w * src[i];
    c_dst += w * dst[i];
    w_sum += w;
  }
  c_src /= w_sum;
  c_dst /= w_sum;

  // Cross-covariance of the centered sets, built dst-side first so that the
  // SVD factors map src directions onto dst directions.
  Matrix3<Scalar> m = Matrix3<Scalar>::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar w = weights.empty() ? Scalar(1) : weights[i];
    m += w * (dst[i] - c_dst) * (src[i] - c_src).transpose();
  }

  Eigen::JacobiSVD<Matrix3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  if (!(sigma(1) > Scalar(1e-12) * std::max(sigma(0), Scalar(1)))) {
    throw DegenerateConfiguration("align_rotation: directions are collinear");
  }

  Matrix3<Scalar> u = svd.matrixU();
  const Matrix3<Scalar> v = svd.matrixV();
  if ((u * v.transpose()).determinant() < Scalar(0)) {
    u.col(2) *= Scalar(-1);  // column of the smallest singular value
  }
  return u * v.transpose();
}

/// Closed-form camera rotation from direction pairs: the R whose motion
/// model n_prime = R^T * n best explains the pairs in the least-squares
/// sense. Optional per-pair weights.
template <typename Scalar>
Matrix3<Scalar> procrustes(std::span<const DirectionPair<Scalar>> pairs,
                           std::span<const Scalar> weights = {}) {
  std::vector<Vector3<Scalar>> src(pairs.size()), dst(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    src[i] = pairs[i].n;
    dst[i] = pairs[i].n_prime;
  }
  // align_rotation returns the map n -> n_prime, i.e. R^T; the camera
  // rotation is its transpose.
  return align_rotation<Scalar>(src, dst, weights).transpose();
}

/// Angle between the rotation-warped frame-A direction and the observed
/// frame-B direction, in radians. Zero for a pair explained by R alone.
/// Computed from both the cross and the dot product so that near-zero
/// residuals resolve below the acos floor of ~3e-8.
template <typename Scalar>
Scalar rotation_residual(const Matrix3<Scalar>& rotation, const DirectionPair<Scalar>& pair) {
  const Vector3<Scalar> warped = rotation.transpose() * pair.n;
  return std::atan2(warped.cross(pair.n_prime).norm(), warped.dot(pair.n_prime));
}

namespace detail {

/// Draws k distinct indices from [0, n). Rejection keeps the draw count
/// independent of previous iterations.
template <typename Rng>
void sample_distinct(Rng& rng, int n, std::span<int> out) {
  std::uniform_int_distribution<int> dist(0, n - 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (;;) {
      const int candidate = dist(rng);
      if (std::find(out.begin(), out.begin() + static_cast<long>(i), candidate) ==
          out.begin() + static_cast<long>(i)) {
        out[i] = candidate;
        break;
      }
    }
  }
}

inline int adaptive_iteration_bound(double inlier_ratio, double confidence, int cap) {
  const double w3 = inlier_ratio * inlier_ratio * inlier_ratio;
  if (w3 >= 1.0) return 0;
  const double denom = std::log1p(-w3);
  if (denom >= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / denom;
  return n >= static_cast<double>(cap) ? cap : static_cast<int>(std::ceil(n));
}

}  // namespace detail

/// Robust rotation from contaminated direction pairs. Samples 3-pair minimal
/// sets, scores every pair by its angular residual, keeps the largest
/// consensus set (ties: first hypothesis wins), then refits on the
/// consensus set and re-partitions until the set is stable. Deterministic
/// for a fixed seed.
template <typename Scalar>
RotationResult<Scalar> estimate_rotation_ransac(std::span<const DirectionPair<Scalar>> pairs,
                                                const RansacConfig<Scalar>& cfg) {
  if (!cfg.valid()) {
    throw Error("estimate_rotation_ransac: invalid config (threshold > 0, iterations >= 1, "
                "min_inliers >= 3)");
  }
  const int n = static_cast<int>(pairs.size());
  if (n < cfg.min_inliers) {
    throw InsufficientPoints("estimate_rotation_ransac: fewer pairs than min_inliers");
  }

  std::mt19937_64 rng(cfg.rng_seed);
  const auto consensus_of = [&](const Matrix3<Scalar>& r) {
    std::vector<int> idx;
    idx.reserve(pairs.size());
    for (int i = 0; i < n; ++i) {
      if (rotation_residual(r, pairs[i]) <= cfg.inlier_threshold) idx.push_back(i);
    }
    return idx;
  };

  Matrix3<Scalar> best_rotation;  // invariant: best == consensus_of(best_rotation)
  std::vector<int> best;
  int sample[3];
  int iteration_bound = cfg.max_iterations;
  for (int iter = 0; iter < iteration_bound; ++iter) {
    detail::sample_distinct(rng, n, sample);
    Matrix3<Scalar> r_hyp;
    try {
      const DirectionPair<Scalar> minimal[3] = {pairs[sample[0]], pairs[sample[1]],
                                                pairs[sample[2]]};
      r_hyp = procrustes<Scalar>(minimal);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    std::vector<int> consensus = consensus_of(r_hyp);
    if (consensus.size() > best.size()) {
      best_rotation = r_hyp;
      best = std::move(consensus);
      iteration_bound =
          std::min(iteration_bound,
                   detail::adaptive_iteration_bound(static_cast<double>(best.size()) / n,
                                                    cfg.confidence, cfg.max_iterations));
    }
  }
  if (static_cast<int>(best.size()) < cfg.min_inliers) {
    throw NoConsensus("estimate_rotation_ransac: no sample reached min_inliers");
  }

  // Consensus refit: fit on the accepted set, re-partition under the new
  // rotation, repeat until stable. A refit that would shrink the consensus
  // below min_inliers is discarded in favor of the last valid state.
  for (int round = 0; round < 20; ++round) {
    std::vector<DirectionPair<Scalar>> subset;
    subset.reserve(best.size());
    for (int i : best) subset.push_back(pairs[i]);
    const Matrix3<Scalar> refit = procrustes<Scalar>(subset);
    std::vector<int> next = consensus_of(refit);
    if (static_cast<int>(next.size()) < cfg.min_inliers) break;
    const bool stable = next == best;
    best_rotation = refit;
    best = std::move(next);
    if (stable) break;
  }

  RotationResult<Scalar> result;
  result.rotation = best_rotation;
  Scalar residual_sum = Scalar(0);
  std::size_t next_inlier = 0;
  for (int i = 0; i < n; ++i) {
    if (next_inlier < best.size() && best[next_inlier] == i) {
      result.inliers.push_back(pairs[i].id);
      residual_sum += rotation_residual(best_rotation, pairs[i]);
      ++next_inlier;
    } else {
      result.outliers.push_back(pairs[i].id);
    }
  }
  result.mean_residual = residual_sum / Scalar(result.inliers.size());
  return result;
}

}  // namespace monopose

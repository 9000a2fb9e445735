#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "monopose/camera.hpp"
#include "monopose/errors.hpp"
#include "monopose/rotation.hpp"

namespace monopose {

/// Residual image motion of one point after the rotation has been removed,
/// as a segment on the normalized image plane. For translation-carrying
/// points the segment lies on a line through the epipole.
template <typename Scalar>
struct FlowSegment {
  Vector2<Scalar> k;             ///< frame-A ray, z dropped
  Vector2<Scalar> k_prime_rot;   ///< rotation-compensated frame-B ray, z dropped
  Scalar length = Scalar(0);     ///< |k_prime_rot - k|, normalized-plane units
  int id = 0;                    ///< correspondence index

  Vector2<Scalar> direction() const { return k_prime_rot - k; }
};

using FlowSegmentd = FlowSegment<double>;

/// Epipole located from intersecting translational-flow lines, with the
/// motion sign and the scatter of the intersections as a quality measure.
template <typename Scalar>
struct EpipoleEstimate {
  Vector3<Scalar> e;             ///< epipole, z = 1
  int c = 1;                     ///< +1 away from the epipole, -1 toward it
  Vector3<Scalar> t_dir;         ///< c * e / |e|, unit
  int n_intersections = 0;       ///< intersections entering the average
  int n_near_parallel = 0;       ///< pairs dropped as unusable
  int n_rejected_segments = 0;   ///< segments rejected as epipole-inconsistent
  std::vector<int> segment_ids;  ///< ids of the segments behind the average
  Matrix2<Scalar> covariance = Matrix2<Scalar>::Zero();  ///< intersection scatter
};

using EpipoleEstimated = EpipoleEstimate<double>;

/// Removes the rotation from a direction pair and projects both rays to the
/// z = 1 plane. For a pair explained by the rotation alone the segment
/// length is zero.
template <typename Scalar>
std::optional<FlowSegment<Scalar>> try_compensate_rotation(const Matrix3<Scalar>& rotation,
                                                           const DirectionPair<Scalar>& pair) {
  const Vector3<Scalar> a = pair.n;
  const Vector3<Scalar> b = rotation * pair.n_prime;  // undo n_prime = R^T n
  if (a.z() <= Scalar(1e-9) || b.z() <= Scalar(1e-9)) {
    return std::nullopt;
  }
  FlowSegment<Scalar> seg;
  seg.k = a.template head<2>() / a.z();
  seg.k_prime_rot = b.template head<2>() / b.z();
  seg.length = (seg.k_prime_rot - seg.k).norm();
  seg.id = pair.id;
  return seg;
}

template <typename Scalar>
FlowSegment<Scalar> compensate_rotation(const Matrix3<Scalar>& rotation,
                                        const DirectionPair<Scalar>& pair) {
  auto seg = try_compensate_rotation(rotation, pair);
  if (!seg) {
    throw BehindCamera("compensate_rotation: compensated ray leaves the forward image plane");
  }
  return *seg;
}

template <typename Scalar>
struct PairIntersection {
  Scalar mu, nu;           ///< line parameters on segments a and b
  Vector2<Scalar> point;   ///< k_a + mu * (k'_a - k_a)
};

/// Intersects the two flow lines. Returns nothing when the lines are close
/// enough to parallel that the intersection is unusable.
template <typename Scalar>
std::optional<PairIntersection<Scalar>> try_intersect_pair(const FlowSegment<Scalar>& a,
                                                           const FlowSegment<Scalar>& b) {
  Matrix2<Scalar> lhs;
  lhs.col(0) = a.k - a.k_prime_rot;
  lhs.col(1) = b.k_prime_rot - b.k;
  const Scalar det = lhs.determinant();
  if (std::abs(det) < Scalar(1e-12)) return std::nullopt;

  // 2x2 condition number from the singular values.
  const Scalar frob2 = lhs.squaredNorm();
  const Scalar mid = frob2 / 2;
  const Scalar disc = std::sqrt(std::max(mid * mid - det * det, Scalar(0)));
  const Scalar smin2 = mid - disc;
  if (!(smin2 > Scalar(0)) || std::sqrt((mid + disc) / smin2) > Scalar(1e8)) {
    return std::nullopt;
  }

  PairIntersection<Scalar> x;
  const Vector2<Scalar> mu_nu = lhs.inverse() * (a.k - b.k);
  x.mu = mu_nu(0);
  x.nu = mu_nu(1);
  x.point = a.k + x.mu * (a.k_prime_rot - a.k);
  return x;
}

template <typename Scalar>
PairIntersection<Scalar> intersect_pair(const FlowSegment<Scalar>& a,
                                        const FlowSegment<Scalar>& b) {
  if (!(a.length > Scalar(0)) || !(b.length > Scalar(0))) {
    throw InsufficientParallax("intersect_pair: zero-length segment");
  }
  auto x = try_intersect_pair(a, b);
  if (!x) {
    throw NearParallel("intersect_pair: flow lines are (near-)parallel");
  }
  return *x;
}

/// Weight of one intersection: the shorter segment of the pair measured
/// against the full-confidence length L, clamped to 1.
template <typename Scalar>
Scalar pair_weight(Scalar length_a, Scalar length_b, Scalar full_confidence_length) {
  const Scalar l = std::min(length_a, length_b);
  return std::min(l / full_confidence_length, Scalar(1));
}

/// Decides whether the flow expands away from the epipole (+1, forward
/// motion along the epipole direction) or contracts toward it (-1), by
/// majority over the segments.
template <typename Scalar>
int sign_of_motion(std::span<const FlowSegment<Scalar>> segments, const Vector2<Scalar>& epipole) {
  int away = 0, toward = 0;
  for (const auto& seg : segments) {
    const Scalar d = seg.direction().dot(seg.k - epipole);
    if (d > Scalar(0)) ++away;
    else if (d < Scalar(0)) ++toward;
  }
  if (away + toward == 0) {
    throw InsufficientParallax("sign_of_motion: no usable segment");
  }
  if (away == toward) {
    throw AmbiguousSign("sign_of_motion: tied vote between expansion and contraction");
  }
  return away > toward ? 1 : -1;
}

template <typename Scalar>
struct EpipoleConfig {
  Scalar full_confidence_length;   ///< L, normalized-plane units
  Scalar min_flow = Scalar(0);     ///< segments shorter than this are dropped
  /// Expected flow-endpoint noise (normalized units). Segments whose line
  /// misses the best-supported intersection by more than the noise allows
  /// are rejected as mistracks before the average; zero disables this.
  Scalar track_noise = Scalar(0);
  int exhaustive_pair_limit = 64;  ///< all pairs up to this many segments
  int sampled_pairs = 2048;        ///< random pairs beyond the limit
  std::uint64_t rng_seed = 0;
};

namespace detail {

/// Perpendicular distance from a point to the segment's infinite line.
template <typename Scalar>
Scalar flow_line_distance(const FlowSegment<Scalar>& seg, const Vector2<Scalar>& point) {
  const Vector2<Scalar> dir = seg.direction() / seg.length;
  const Vector2<Scalar> rel = point - seg.k;
  return std::abs(dir.x() * rel.y() - dir.y() * rel.x());
}

/// How far a noisy segment's line may legitimately pass from the epipole:
/// endpoint noise grows with the lever arm between the segment and the
/// intersection point.
template <typename Scalar>
Scalar flow_line_tolerance(const FlowSegment<Scalar>& seg, const Vector2<Scalar>& point,
                           Scalar track_noise) {
  return Scalar(3) * track_noise * (Scalar(1) + (point - seg.k).norm() / seg.length);
}

/// Lower weighted median.
template <typename Scalar>
Scalar weighted_median(std::vector<std::pair<Scalar, Scalar>>& value_weight) {
  std::sort(value_weight.begin(), value_weight.end());
  Scalar total = Scalar(0);
  for (const auto& [v, w] : value_weight) total += w;
  Scalar acc = Scalar(0);
  for (const auto& [v, w] : value_weight) {
    acc += w;
    if (acc >= total / 2) return v;
  }
  return value_weight.back().first;
}

template <typename Scalar>
std::vector<std::pair<int, int>> intersection_pairs(int count, int exhaustive_limit,
                                                    int sampled, std::uint64_t seed) {
  std::vector<std::pair<int, int>> pairs;
  if (count <= exhaustive_limit) {
    for (int i = 0; i < count; ++i)
      for (int j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, count - 1);
    pairs.reserve(sampled);
    for (int s = 0; s < sampled; ++s) {
      int i = dist(rng), j = dist(rng);
      while (j == i) j = dist(rng);
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

}  // namespace detail

/// Weighted average of pairwise flow-line intersections. Short segments are
/// down-weighted; near-parallel pairs are dropped and counted. With a
/// nonzero track_noise, segments inconsistent with the best-supported
/// intersection are rejected first, so mismatched tracks cannot drag the
/// average. The covariance is the weighted scatter of the intersection
/// points about the returned epipole.
template <typename Scalar>
EpipoleEstimate<Scalar> estimate_epipole(std::span<const FlowSegment<Scalar>> segments,
                                         const EpipoleConfig<Scalar>& cfg) {
  std::vector<FlowSegment<Scalar>> usable;
  usable.reserve(segments.size());
  for (const auto& seg : segments) {
    if (seg.length > cfg.min_flow && seg.length > Scalar(0)) usable.push_back(seg);
  }
  if (usable.size() < 2) {
    throw InsufficientParallax("estimate_epipole: need at least 2 segments with usable flow");
  }

  int n_rejected = 0;
  if (cfg.track_noise > Scalar(0)) {
    // Anchor on the intersection whose point the most flow lines (by
    // weighted length) agree on, then drop the segments that do not.
    const auto anchor_pairs =
        detail::intersection_pairs<Scalar>(static_cast<int>(usable.size()),
                                           cfg.exhaustive_pair_limit, cfg.sampled_pairs,
                                           cfg.rng_seed);
    Scalar best_support = Scalar(-1);
    Vector2<Scalar> anchor = Vector2<Scalar>::Zero();
    for (const auto& [i, j] : anchor_pairs) {
      const auto x = try_intersect_pair(usable[i], usable[j]);
      if (!x) continue;
      Scalar support = Scalar(0);
      for (const auto& seg : usable) {
        if (detail::flow_line_distance(seg, x->point) <=
            detail::flow_line_tolerance(seg, x->point, cfg.track_noise)) {
          support += std::min(seg.length / cfg.full_confidence_length, Scalar(1));
        }
      }
      if (support > best_support) {
        best_support = support;
        anchor = x->point;
      }
    }
    if (best_support >= Scalar(0)) {
      std::vector<FlowSegment<Scalar>> consistent;
      consistent.reserve(usable.size());
      for (const auto& seg : usable) {
        if (detail::flow_line_distance(seg, anchor) <=
            detail::flow_line_tolerance(seg, anchor, cfg.track_noise)) {
          consistent.push_back(seg);
        }
      }
      n_rejected = static_cast<int>(usable.size() - consistent.size());
      if (consistent.size() >= 2) usable = std::move(consistent);
    }
  }

  const auto pair_indices =
      detail::intersection_pairs<Scalar>(static_cast<int>(usable.size()),
                                         cfg.exhaustive_pair_limit, cfg.sampled_pairs,
                                         cfg.rng_seed);
  std::vector<Vector2<Scalar>> points;
  std::vector<Scalar> weights;
  points.reserve(pair_indices.size());
  weights.reserve(pair_indices.size());
  int n_near_parallel = 0;
  for (const auto& [i, j] : pair_indices) {
    const auto x = try_intersect_pair(usable[i], usable[j]);
    if (!x) {
      ++n_near_parallel;
      continue;
    }
    points.push_back(x->point);
    weights.push_back(
        pair_weight(usable[i].length, usable[j].length, cfg.full_confidence_length));
  }
  if (points.empty()) {
    throw AllParallel("estimate_epipole: every pair of flow lines is near-parallel");
  }

  // Ill-conditioned pairs scatter far along the common flow direction; keep
  // the average to the dispersion core around the weighted median.
  std::vector<bool> keep(points.size(), true);
  if (points.size() >= 8) {
    std::vector<std::pair<Scalar, Scalar>> coord(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) coord[i] = {points[i].x(), weights[i]};
    Vector2<Scalar> center;
    center.x() = detail::weighted_median(coord);
    for (std::size_t i = 0; i < points.size(); ++i) coord[i] = {points[i].y(), weights[i]};
    center.y() = detail::weighted_median(coord);
    for (std::size_t i = 0; i < points.size(); ++i) {
      coord[i] = {(points[i] - center).norm(), weights[i]};
    }
    const Scalar spread = detail::weighted_median(coord);
    const Scalar cutoff =
        Scalar(6) * Scalar(1.4826) * spread + Scalar(1e-9) * (Scalar(1) + center.norm());
    for (std::size_t i = 0; i < points.size(); ++i) {
      keep[i] = (points[i] - center).norm() <= cutoff;
    }
  }

  Scalar w_sum = Scalar(0);
  Vector2<Scalar> mean = Vector2<Scalar>::Zero();
  int n_used = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    mean += weights[i] * points[i];
    w_sum += weights[i];
    ++n_used;
  }
  mean /= w_sum;

  Matrix2<Scalar> cov = Matrix2<Scalar>::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!keep[i]) continue;
    const Vector2<Scalar> d = points[i] - mean;
    cov += (weights[i] / w_sum) * d * d.transpose();
  }

  EpipoleEstimate<Scalar> est;
  est.e = Vector3<Scalar>(mean.x(), mean.y(), Scalar(1));
  est.c = sign_of_motion<Scalar>(usable, mean);
  est.t_dir = Scalar(est.c) * est.e.normalized();
  est.n_intersections = n_used;
  est.n_near_parallel = n_near_parallel;
  est.n_rejected_segments = n_rejected;
  for (const auto& seg : usable) est.segment_ids.push_back(seg.id);
  est.covariance = cov;
  return est;
}

template <typename Scalar>
EpipoleEstimate<Scalar> estimate_epipole(std::span<const FlowSegment<Scalar>> segments,
                                         Scalar full_confidence_length) {
  EpipoleConfig<Scalar> cfg;
  cfg.full_confidence_length = full_confidence_length;
  return estimate_epipole(segments, cfg);
}

}  // namespace monopose

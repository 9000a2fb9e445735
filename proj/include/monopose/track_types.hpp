#pragma once

#include <Eigen/Core>

#include <map>
#include <vector>

namespace monopose {

/// One tracked point seen in two frames, pixel coordinates.
struct FeatureCorrespondence {
  int id = 0;
  Eigen::Vector2d a;  ///< frame i
  Eigen::Vector2d b;  ///< frame j
};

/// One observation within a track.
struct TrackObservation {
  int frame = 0;
  Eigen::Vector2d position;
};

/// Sparse feature tracks over a frame range. Frames within a track are
/// strictly increasing; the set is immutable once parsed.
struct TrackSet {
  int frames = 0;
  std::map<int, std::vector<TrackObservation>> tracks;
};

}  // namespace monopose

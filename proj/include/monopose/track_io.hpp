#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "monopose/camera.hpp"
#include "monopose/track_types.hpp"

namespace monopose {

/// Column positions of track_id, frame, u, v in a track CSV. Extra trailing
/// columns are ignored.
struct TrackColumns {
  int track_id = 0;
  int frame = 1;
  int u = 2;
  int v = 3;

  int max_index() const;
};

/// Parses a track CSV (`track_id,frame,u,v` header, LF lines, '#' comments).
/// An empty stream yields an empty TrackSet. Malformed lines raise ParseError
/// with the line number; a repeated (id, frame) raises DuplicateObservation.
TrackSet parse_tracks(std::istream& in, const TrackColumns& columns = {});
TrackSet parse_tracks_file(const std::string& path, const TrackColumns& columns = {});

/// Writes the canonical track CSV; parse_tracks is total on this output.
void serialize_tracks(const TrackSet& tracks, std::ostream& out);

/// Correspondences of every track observed in both frames, ascending id.
std::vector<FeatureCorrespondence> pair_correspondences(const TrackSet& tracks, int frame_i,
                                                        int frame_j);

/// Two-frame correspondences written as a 2-frame track set.
TrackSet tracks_from_correspondences(const std::vector<FeatureCorrespondence>& matches);

/// Parses a calibration file: one `key value` (or `key = value`) per line,
/// '#' comments; keys f_mm, sx_mm, sy_mm, cx_px, cy_px, all required.
CameraIntrinsicsd parse_calibration(std::istream& in);
CameraIntrinsicsd parse_calibration_file(const std::string& path);

void serialize_calibration(const CameraIntrinsicsd& intr, std::ostream& out);

}  // namespace monopose

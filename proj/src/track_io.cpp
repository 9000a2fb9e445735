#include "monopose/track_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "monopose/errors.hpp"

namespace monopose {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

double parse_double(std::string_view field, long line_number, const char* what) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(std::string("expected a number for ") + what + ", got '" +
                         std::string(field) + "'",
                     line_number);
  }
  return value;
}

long parse_int(std::string_view field, long line_number, const char* what) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(std::string("expected an integer for ") + what + ", got '" +
                         std::string(field) + "'",
                     line_number);
  }
  return value;
}

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value) {
  std::array<char, 32> buffer;
  const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), ptr);
}

}  // namespace

int TrackColumns::max_index() const {
  return std::max({track_id, frame, u, v});
}

TrackSet parse_tracks(std::istream& in, const TrackColumns& columns) {
  TrackSet set;
  std::string line;
  long line_number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = trim(view.substr(0, hash));
    }
    if (view.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      // Header row: first field is a column name, not a number.
      if (view.substr(0, 8) == "track_id") continue;
      throw ParseError("missing 'track_id,frame,u,v' header", line_number);
    }
    const auto fields = split_csv(view);
    if (static_cast<int>(fields.size()) <= columns.max_index()) {
      throw ParseError("expected at least " + std::to_string(columns.max_index() + 1) +
                           " columns, got " + std::to_string(fields.size()),
                       line_number);
    }
    TrackObservation obs;
    const int id = static_cast<int>(parse_int(fields[columns.track_id], line_number, "track_id"));
    obs.frame = static_cast<int>(parse_int(fields[columns.frame], line_number, "frame"));
    obs.position.x() = parse_double(fields[columns.u], line_number, "u");
    obs.position.y() = parse_double(fields[columns.v], line_number, "v");
    if (obs.frame < 0) {
      throw ParseError("negative frame index", line_number);
    }
    auto& track = set.tracks[id];
    const auto at = std::lower_bound(
        track.begin(), track.end(), obs.frame,
        [](const TrackObservation& o, int frame) { return o.frame < frame; });
    if (at != track.end() && at->frame == obs.frame) {
      throw DuplicateObservation("track " + std::to_string(id) + " observed twice in frame " +
                                 std::to_string(obs.frame) + " (line " +
                                 std::to_string(line_number) + ")");
    }
    track.insert(at, obs);
    set.frames = std::max(set.frames, obs.frame + 1);
  }
  return set;
}

TrackSet parse_tracks_file(const std::string& path, const TrackColumns& columns) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open track file '" + path + "'");
  }
  return parse_tracks(in, columns);
}

void serialize_tracks(const TrackSet& tracks, std::ostream& out) {
  out << "track_id,frame,u,v\n";
  for (const auto& [id, observations] : tracks.tracks) {
    for (const auto& obs : observations) {
      out << id << ',' << obs.frame << ',' << format_double(obs.position.x()) << ','
          << format_double(obs.position.y()) << '\n';
    }
  }
}

std::vector<FeatureCorrespondence> pair_correspondences(const TrackSet& tracks, int frame_i,
                                                        int frame_j) {
  if (frame_i == frame_j) {
    throw FrameOutOfRange("pair_correspondences: frames must differ");
  }
  for (const int frame : {frame_i, frame_j}) {
    if (frame < 0 || frame >= tracks.frames) {
      throw FrameOutOfRange("frame " + std::to_string(frame) + " outside [0, " +
                            std::to_string(tracks.frames) + ")");
    }
  }
  std::vector<FeatureCorrespondence> matches;
  for (const auto& [id, observations] : tracks.tracks) {
    const Eigen::Vector2d* in_i = nullptr;
    const Eigen::Vector2d* in_j = nullptr;
    for (const auto& obs : observations) {
      if (obs.frame == frame_i) in_i = &obs.position;
      if (obs.frame == frame_j) in_j = &obs.position;
    }
    if (in_i && in_j) {
      matches.push_back(FeatureCorrespondence{id, *in_i, *in_j});
    }
  }
  return matches;  // std::map iteration gives ascending id
}

TrackSet tracks_from_correspondences(const std::vector<FeatureCorrespondence>& matches) {
  TrackSet set;
  set.frames = 2;
  for (const auto& match : matches) {
    set.tracks[match.id] = {TrackObservation{0, match.a}, TrackObservation{1, match.b}};
  }
  return set;
}

CameraIntrinsicsd parse_calibration(std::istream& in) {
  std::map<std::string, double> values;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = trim(view.substr(0, hash));
    }
    if (view.empty()) continue;
    std::string flattened(view);
    std::replace(flattened.begin(), flattened.end(), '=', ' ');
    std::istringstream fields(flattened);
    std::string key, number, rest;
    if (!(fields >> key >> number) || (fields >> rest)) {
      throw ParseError("expected 'key value'", line_number);
    }
    values[key] = parse_double(number, line_number, key.c_str());
  }
  for (const char* key : {"f_mm", "sx_mm", "sy_mm", "cx_px", "cy_px"}) {
    if (!values.count(key)) {
      throw ParseError(std::string("missing calibration key '") + key + "'", 0);
    }
  }
  CameraIntrinsicsd intr{values["f_mm"], values["sx_mm"], values["sy_mm"], values["cx_px"],
                         values["cy_px"]};
  if (!intr.valid()) {
    throw ParseError("calibration values out of range (need positive f and pitch)", 0);
  }
  return intr;
}

CameraIntrinsicsd parse_calibration_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open calibration file '" + path + "'");
  }
  return parse_calibration(in);
}

void serialize_calibration(const CameraIntrinsicsd& intr, std::ostream& out) {
  out << "# pinhole calibration, lengths in millimetres\n"
      << "f_mm " << format_double(intr.f) << "\n"
      << "sx_mm " << format_double(intr.s_x) << "\n"
      << "sy_mm " << format_double(intr.s_y) << "\n"
      << "cx_px " << format_double(intr.c_x) << "\n"
      << "cy_px " << format_double(intr.c_y) << "\n";
}

}  // namespace monopose

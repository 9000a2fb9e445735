#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "monopose/simulate.hpp"
#include "monopose/track_io.hpp"

using namespace monopose;

namespace {

bool equal_tracksets(const TrackSet& a, const TrackSet& b) {
  if (a.frames != b.frames || a.tracks.size() != b.tracks.size()) return false;
  for (const auto& [id, obs] : a.tracks) {
    const auto it = b.tracks.find(id);
    if (it == b.tracks.end() || it->second.size() != obs.size()) return false;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (obs[i].frame != it->second[i].frame) return false;
      if (obs[i].position != it->second[i].position) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("parse_tracks: empty input gives an empty set") {
  std::istringstream in("");
  const TrackSet set = parse_tracks(in);
  CHECK(set.tracks.empty());
  CHECK(set.frames == 0);
}

TEST_CASE("parse_tracks: two tracks over three frames") {
  std::istringstream in(
      "track_id,frame,u,v\n"
      "# a comment line\n"
      "7,0,100.5,200.25\n"
      "7,1,101.5,201.25\n"
      "7,2,102.5,202.25\n"
      "3,0,50,60\n"
      "3,2,52,62\n");
  const TrackSet set = parse_tracks(in);
  CHECK(set.frames == 3);
  CHECK(set.tracks.size() == 2);
  CHECK(set.tracks.at(7).size() == 3);
  CHECK(set.tracks.at(3).size() == 2);
  CHECK(set.tracks.at(7)[1].position == Eigen::Vector2d(101.5, 201.25));
  CHECK(set.tracks.at(3)[1].frame == 2);
}

TEST_CASE("parse_tracks: trailing columns are ignored, column maps work") {
  std::istringstream in(
      "track_id,frame,u,v,response,age\n"
      "1,0,10,20,0.9,4\n");
  CHECK(parse_tracks(in).tracks.at(1)[0].position == Eigen::Vector2d(10, 20));

  std::istringstream remapped(
      "track_id,u,v,frame\n"
      "1,10,20,0\n");
  TrackColumns columns;
  columns.u = 1;
  columns.v = 2;
  columns.frame = 3;
  CHECK(parse_tracks(remapped, columns).tracks.at(1)[0].position == Eigen::Vector2d(10, 20));
}

TEST_CASE("parse_tracks: errors carry line numbers") {
  std::istringstream bad_number(
      "track_id,frame,u,v\n"
      "1,0,10,20\n"
      "1,1,ten,20\n");
  try {
    parse_tracks(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 3);
  }

  std::istringstream short_row(
      "track_id,frame,u,v\n"
      "1,0,10\n");
  CHECK_THROWS_AS(parse_tracks(short_row), ParseError);

  std::istringstream no_header("1,0,10,20\n");
  CHECK_THROWS_AS(parse_tracks(no_header), ParseError);

  std::istringstream duplicate(
      "track_id,frame,u,v\n"
      "1,0,10,20\n"
      "1,0,11,21\n");
  CHECK_THROWS_AS(parse_tracks(duplicate), DuplicateObservation);
}

TEST_CASE("parse_tracks: observations sort by frame within a track") {
  std::istringstream in(
      "track_id,frame,u,v\n"
      "1,5,15,25\n"
      "1,2,12,22\n"
      "1,9,19,29\n");
  const TrackSet set = parse_tracks(in);
  const auto& track = set.tracks.at(1);
  CHECK(track[0].frame == 2);
  CHECK(track[1].frame == 5);
  CHECK(track[2].frame == 9);
}

TEST_CASE("serialize/parse round trip over random track sets") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coord(-1e4, 1e4);
  std::uniform_int_distribution<int> n_tracks(0, 20), n_frames(1, 12), id_dist(0, 500);
  for (int round = 0; round < 50; ++round) {
    TrackSet original;
    const int tracks = n_tracks(rng);
    for (int t = 0; t < tracks; ++t) {
      const int id = id_dist(rng);
      if (original.tracks.count(id)) continue;
      auto& observations = original.tracks[id];
      int frame = 0;
      const int observations_count = n_frames(rng);
      for (int o = 0; o < observations_count; ++o) {
        frame += 1 + (rng() % 3);
        observations.push_back({frame, {coord(rng), coord(rng)}});
        original.frames = std::max(original.frames, frame + 1);
      }
    }
    std::ostringstream out;
    serialize_tracks(original, out);
    std::istringstream in(out.str());
    const TrackSet parsed = parse_tracks(in);
    CHECK(equal_tracksets(original, parsed));
  }
}

TEST_CASE("pair_correspondences: selection, order and errors") {
  std::istringstream in(
      "track_id,frame,u,v\n"
      "5,0,1,2\n"
      "5,1,3,4\n"
      "2,0,9,8\n"
      "9,1,7,6\n"
      "4,0,5,5\n"
      "4,1,6,6\n");
  const TrackSet set = parse_tracks(in);
  const auto matches = pair_correspondences(set, 0, 1);
  REQUIRE(matches.size() == 2);  // tracks 2 and 9 observed in only one frame
  CHECK(matches[0].id == 4);
  CHECK(matches[1].id == 5);
  CHECK(matches[0].a == Eigen::Vector2d(5, 5));
  CHECK(matches[0].b == Eigen::Vector2d(6, 6));
  CHECK(matches[1].a == Eigen::Vector2d(1, 2));

  const auto reversed = pair_correspondences(set, 1, 0);
  CHECK(reversed[0].a == Eigen::Vector2d(6, 6));
  CHECK(reversed[0].b == Eigen::Vector2d(5, 5));

  CHECK_THROWS_AS(pair_correspondences(set, 0, 2), FrameOutOfRange);
  CHECK_THROWS_AS(pair_correspondences(set, -1, 1), FrameOutOfRange);
  CHECK_THROWS_AS(pair_correspondences(set, 1, 1), FrameOutOfRange);
}

TEST_CASE("pair_correspondences: all tracks present in both frames") {
  std::istringstream in(
      "track_id,frame,u,v\n"
      "0,0,1,1\n0,1,2,2\n"
      "1,0,3,3\n1,1,4,4\n"
      "2,0,5,5\n2,1,6,6\n");
  CHECK(pair_correspondences(parse_tracks(in), 0, 1).size() == 3);
}

TEST_CASE("simulator matches survive the track round trip") {
  SceneSpec spec;
  spec.randomize_motion = true;
  spec.seed = 63;
  const GeneratedScene scene = generate_scene(spec);
  const TrackSet tracks = tracks_from_correspondences(scene.matches);
  std::ostringstream out;
  serialize_tracks(tracks, out);
  std::istringstream in(out.str());
  const auto matches = pair_correspondences(parse_tracks(in), 0, 1);
  REQUIRE(matches.size() == scene.matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    CHECK(matches[i].id == scene.matches[i].id);
    CHECK(matches[i].a == scene.matches[i].a);
    CHECK(matches[i].b == scene.matches[i].b);
  }
}

TEST_CASE("parse_calibration: the documented format") {
  std::istringstream in(
      "# demo camera\n"
      "f_mm 8.0\n"
      "sx_mm = 0.011\n"
      "sy_mm 0.011\n"
      "cx_px 320\n"
      "cy_px 240  # centered\n");
  const CameraIntrinsicsd intr = parse_calibration(in);
  CHECK(intr.f == 8.0);
  CHECK(intr.s_x == 0.011);
  CHECK(intr.c_x == 320.0);
  CHECK(intr.valid());
}

TEST_CASE("parse_calibration: missing keys and bad values") {
  std::istringstream missing("f_mm 8\nsx_mm 0.011\nsy_mm 0.011\ncx_px 320\n");
  CHECK_THROWS_AS(parse_calibration(missing), ParseError);

  std::istringstream junk("f_mm eight\n");
  CHECK_THROWS_AS(parse_calibration(junk), ParseError);

  std::istringstream negative("f_mm -8\nsx_mm 0.011\nsy_mm 0.011\ncx_px 320\ncy_px 240\n");
  CHECK_THROWS_AS(parse_calibration(negative), ParseError);
}

TEST_CASE("calibration round trip") {
  const CameraIntrinsicsd intr{8.0, 0.011, 0.012, 320.25, 239.75};
  std::ostringstream out;
  serialize_calibration(intr, out);
  std::istringstream in(out.str());
  const CameraIntrinsicsd back = parse_calibration(in);
  CHECK(back.f == intr.f);
  CHECK(back.s_x == intr.s_x);
  CHECK(back.s_y == intr.s_y);
  CHECK(back.c_x == intr.c_x);
  CHECK(back.c_y == intr.c_y);
}

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace agcc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline constexpr std::size_t kFaceLandmarks = 68;
inline constexpr std::size_t kMouthFirst = 48;
inline constexpr std::size_t kMouthLandmarks = 12;  // outer lip contour 48..59

using FaceFrame = std::array<Point2, kFaceLandmarks>;
using MouthFrame = std::array<Point2, kMouthLandmarks>;

struct LandmarkSequence {
  std::vector<FaceFrame> frames;
  std::vector<double> times_sec;  // one per frame; may be empty for synthetic input
  double frame_rate_hz = 30.0;
  std::string speaker_id;
  std::string utterance_id;
  bool normalized = false;
};

struct MouthSequence {
  std::vector<MouthFrame> frames;
  double frame_rate_hz = 30.0;
  std::string speaker_id;
  std::string utterance_id;
};

// Pupil proxies: centroid of the six contour points of each eye.
Point2 eye_centroid_first(const FaceFrame& f);   // indices 36..41
Point2 eye_centroid_second(const FaceFrame& f);  // indices 42..47

/// Maps every frame into the canonical face frame: eye midpoint at the
/// origin, both eye centroids on the x axis one unit apart, mean mouth point
/// at negative y. Each frame gets its own similarity transform (rotation,
/// uniform scale, translation); reflections are never applied.
///
/// Throws DegenerateFace when the eye distance in some frame is below 1e-12,
/// MalformedInput on an empty sequence or non-finite coordinates.
LandmarkSequence normalize_sequence(const LandmarkSequence& seq);

FaceFrame normalize_frame(const FaceFrame& frame);

/// Projects landmarks 48..59 of a normalized sequence. Throws NotNormalized.
MouthSequence extract_mouth(const LandmarkSequence& seq);

// Landmark CSV: `frame,t_sec,x0,y0,...,x67,y67`. Frame rate is estimated from
// the median t_sec step when there are at least two frames, otherwise
// `fallback_fps` is used.
LandmarkSequence read_landmark_csv(std::istream& in, const std::string& source_name,
                                   double fallback_fps = 30.0);
LandmarkSequence read_landmark_csv_file(const std::string& path, double fallback_fps = 30.0);
void write_landmark_csv(std::ostream& out, const LandmarkSequence& seq);

}  // namespace agcc

// SPDX-License-Identifier: Apache-2.0
#include "agcc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "agcc/error.hpp"
#include "agcc/io.hpp"

namespace agcc {
namespace {

Point2 centroid(const FaceFrame& f, std::size_t first, std::size_t count) {
  Point2 c;
  for (std::size_t i = first; i < first + count; ++i) {
    c.x += f[i].x;
    c.y += f[i].y;
  }
  c.x /= static_cast<double>(count);
  c.y /= static_cast<double>(count);
  return c;
}

}  // namespace

Point2 eye_centroid_first(const FaceFrame& f) { return centroid(f, 36, 6); }
Point2 eye_centroid_second(const FaceFrame& f) { return centroid(f, 42, 6); }

FaceFrame normalize_frame(const FaceFrame& frame) {
  for (const auto& p : frame) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::MalformedInput, "non-finite landmark coordinate");
    }
  }
  const Point2 a = eye_centroid_first(frame);
  const Point2 b = eye_centroid_second(frame);
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double ipd = std::hypot(vx, vy);
  if (ipd < 1e-12) fail(ErrorCode::DegenerateFace, "inter-pupil distance below 1e-12");

  const Point2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  double c = vx / ipd;
  double s = vy / ipd;

  // The eye line fixes the rotation only up to a half turn; pick the one that
  // leaves the mouth below the eyes.
  double mouth_y = 0.0;
  for (std::size_t i = kMouthFirst; i < kMouthFirst + kMouthLandmarks; ++i) {
    mouth_y += -s * (frame[i].x - mid.x) + c * (frame[i].y - mid.y);
  }
  if (mouth_y > 0.0) {
    c = -c;
    s = -s;
  }

  FaceFrame out;
  for (std::size_t i = 0; i < kFaceLandmarks; ++i) {
    const double dx = frame[i].x - mid.x;
    const double dy = frame[i].y - mid.y;
    out[i] = {(c * dx + s * dy) / ipd, (-s * dx + c * dy) / ipd};
  }
  return out;
}

LandmarkSequence normalize_sequence(const LandmarkSequence& seq) {
  if (seq.frames.empty()) fail(ErrorCode::MalformedInput, "empty landmark sequence");
  if (!(seq.frame_rate_hz > 0.0)) fail(ErrorCode::MalformedInput, "frame rate must be positive");
  LandmarkSequence out = seq;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    try {
      out.frames[i] = normalize_frame(seq.frames[i]);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (utterance '" + seq.utterance_id +
                                "', frame " + std::to_string(i) + ")");
    }
  }
  out.normalized = true;
  return out;
}

MouthSequence extract_mouth(const LandmarkSequence& seq) {
  if (!seq.normalized) {
    fail(ErrorCode::NotNormalized, "utterance '" + seq.utterance_id + "' is not normalized");
  }
  MouthSequence m;
  m.frame_rate_hz = seq.frame_rate_hz;
  m.speaker_id = seq.speaker_id;
  m.utterance_id = seq.utterance_id;
  m.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) {
    MouthFrame mf;
    std::copy_n(f.begin() + kMouthFirst, kMouthLandmarks, mf.begin());
    m.frames.push_back(mf);
  }
  return m;
}

LandmarkSequence read_landmark_csv(std::istream& in, const std::string& source_name,
                                   double fallback_fps) {
  LandmarkSequence seq;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = io::trim(line);
    if (body.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(lineno);
    const auto cells = io::split(body, ',');
    if (!header_seen) {
      if (cells.size() < 2 || io::trim(cells[0]) != "frame" || io::trim(cells[1]) != "t_sec") {
        fail(ErrorCode::ParseError, where + ": expected header frame,t_sec,x0,y0,...");
      }
      if (cells.size() != 2 + 2 * kFaceLandmarks) {
        fail(ErrorCode::MalformedInput, where + ": header does not list 68 points");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 2 + 2 * kFaceLandmarks) {
      fail(ErrorCode::MalformedInput, where + ": expected 138 columns, found " +
                                          std::to_string(cells.size()));
    }
    io::parse_int(cells[0], where);
    seq.times_sec.push_back(io::parse_double(cells[1], where));
    FaceFrame f;
    for (std::size_t i = 0; i < kFaceLandmarks; ++i) {
      f[i].x = io::parse_double(cells[2 + 2 * i], where);
      f[i].y = io::parse_double(cells[3 + 2 * i], where);
      if (!std::isfinite(f[i].x) || !std::isfinite(f[i].y)) {
        fail(ErrorCode::MalformedInput, where + ": non-finite coordinate");
      }
    }
    seq.frames.push_back(f);
  }
  if (!header_seen) fail(ErrorCode::ParseError, source_name + ": missing header");

  seq.frame_rate_hz = fallback_fps;
  if (seq.times_sec.size() >= 2) {
    std::vector<double> steps;
    for (std::size_t i = 1; i < seq.times_sec.size(); ++i) {
      steps.push_back(seq.times_sec[i] - seq.times_sec[i - 1]);
    }
    std::nth_element(steps.begin(), steps.begin() + static_cast<long>(steps.size() / 2), steps.end());
    const double step = steps[steps.size() / 2];
    if (!(step > 0.0)) fail(ErrorCode::MalformedInput, source_name + ": t_sec not increasing");
    // Snap to the nearest 1e-3 Hz so 1/30 s steps written in decimal read back as 30 fps.
    seq.frame_rate_hz = std::round(1000.0 / step) / 1000.0;
  }
  return seq;
}

LandmarkSequence read_landmark_csv_file(const std::string& path, double fallback_fps) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open landmark file " + path);
  return read_landmark_csv(in, path, fallback_fps);
}

void write_landmark_csv(std::ostream& out, const LandmarkSequence& seq) {
  out << "frame,t_sec";
  for (std::size_t i = 0; i < kFaceLandmarks; ++i) out << ",x" << i << ",y" << i;
  out << '\n';
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const double ts = t < seq.times_sec.size() ? seq.times_sec[t]
                                               : static_cast<double>(t) / seq.frame_rate_hz;
    out << t << ',' << io::format_double(ts);
    for (const auto& p : seq.frames[t]) {
      out << ',' << io::format_double(p.x) << ',' << io::format_double(p.y);
    }
    out << '\n';
  }
}

}  // namespace agcc

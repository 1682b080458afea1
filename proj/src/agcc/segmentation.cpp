// SPDX-License-Identifier: Apache-2.0
#include "agcc/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "agcc/error.hpp"
#include "agcc/io.hpp"

namespace agcc {
namespace {

constexpr double kOverlapTolSec = 1e-6;
// Absorbs decimal round-off in start*fps (0.2*30 = 6.000000000000001).
constexpr double kFrameEps = 1e-6;

std::string strip_stress(std::string_view label) {
  std::string s(label);
  while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

bool has_stress_marker(std::string_view label) {
  return !label.empty() && std::isdigit(static_cast<unsigned char>(label.back()));
}

const std::set<std::string>& arpabet_vowels() {
  static const std::set<std::string> v = {"AA", "AE", "AH", "AO", "AW", "AX", "AY", "EH", "ER",
                                          "EY", "IH", "IX", "IY", "OW", "OY", "UH", "UW"};
  return v;
}

std::string file_stem_for(const std::string& segment_id) {
  std::string s = segment_id;
  for (char& c : s) {
    if (c == '#' || c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return s;
}

}  // namespace

std::string make_segment_id(const std::string& utterance_id, std::size_t index) {
  return utterance_id + "#" + std::to_string(index);
}

std::vector<PhonemeInterval> parse_alignment(std::istream& in, const std::string& source_name) {
  std::vector<PhonemeInterval> out;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const std::string where = source_name + ":" + std::to_string(lineno);
    auto cells = io::split(io::trim(line), '\t');
    if (!header_seen) {
      if (cells.size() != 3 || io::trim(cells[0]) != "label" || io::trim(cells[1]) != "start_sec" ||
          io::trim(cells[2]) != "end_sec") {
        fail(ErrorCode::ParseError, where + ": expected header label<TAB>start_sec<TAB>end_sec");
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 3) {
      fail(ErrorCode::ParseError, where + ": expected 3 tab-separated fields");
    }
    PhonemeInterval iv;
    iv.label = std::string(io::trim(cells[0]));
    iv.start_sec = io::parse_double(cells[1], where);
    iv.end_sec = io::parse_double(cells[2], where);
    if (iv.label.empty()) fail(ErrorCode::ParseError, where + ": empty label");
    if (!(iv.start_sec >= 0.0) || !(iv.end_sec > iv.start_sec) || !std::isfinite(iv.end_sec)) {
      fail(ErrorCode::ParseError, where + ": require 0 <= start_sec < end_sec");
    }
    out.push_back(std::move(iv));
    lines.push_back(lineno);
  }
  if (!header_seen) fail(ErrorCode::ParseError, source_name + ": missing header");

  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].start_sec < out[b].start_sec; });
  std::vector<PhonemeInterval> sorted;
  sorted.reserve(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) {
      const auto& prev = out[order[i - 1]];
      const auto& cur = out[order[i]];
      if (prev.end_sec - cur.start_sec > kOverlapTolSec) {
        fail(ErrorCode::OverlapError, source_name + ":" + std::to_string(lines[order[i]]) +
                                          ": interval overlaps the one on line " +
                                          std::to_string(lines[order[i - 1]]));
      }
    }
    sorted.push_back(out[order[i]]);
  }
  return sorted;
}

std::vector<PhonemeInterval> parse_alignment_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open alignment file " + path.string());
  return parse_alignment(in, path.string());
}

VowelAliasTable::VowelAliasTable()
    : table_{{"AA", Vowel::A}, {"AH", Vowel::Schwa}, {"EH", Vowel::E},
             {"IY", Vowel::I}, {"AE", Vowel::Ae},    {"UW", Vowel::U}} {}

std::optional<Vowel> VowelAliasTable::lookup(std::string_view label, bool strict) const {
  if (auto it = table_.find(std::string(label)); it != table_.end()) return it->second;
  const std::string base = strip_stress(label);
  if (auto it = table_.find(base); it != table_.end()) return it->second;
  if (strict && has_stress_marker(label) && !arpabet_vowels().contains(base)) {
    fail(ErrorCode::ParseError, "unknown vowel-like label '" + std::string(label) + "'");
  }
  return std::nullopt;
}

Series mouth_frames_to_series(const MouthSequence& mouth, std::size_t begin, std::size_t end) {
  Series s(end - begin, kGestureDims);
  for (std::size_t t = begin; t < end; ++t) {
    const auto& f = mouth.frames[t];
    for (std::size_t p = 0; p < kMouthLandmarks; ++p) {
      s(t - begin, 2 * p) = f[p].x;
      s(t - begin, 2 * p + 1) = f[p].y;
    }
  }
  return s;
}

CutReport cut_segments(const MouthSequence& mouth, const std::vector<PhonemeInterval>& intervals,
                       const SegmentMeta& meta, const VowelAliasTable& aliases, bool strict) {
  CutReport report;
  const double fps = mouth.frame_rate_hz;
  const auto n = static_cast<long long>(mouth.frames.size());
  for (const auto& iv : intervals) {
    const auto vowel = aliases.lookup(iv.label, strict);
    if (!vowel) {
      ++report.non_target;
      continue;
    }
    long long begin = static_cast<long long>(std::floor(iv.start_sec * fps + kFrameEps));
    long long end = static_cast<long long>(std::ceil(iv.end_sec * fps - kFrameEps));
    begin = std::clamp(begin, 0LL, n);
    end = std::clamp(end, 0LL, n);
    if (end - begin < static_cast<long long>(kMinSegmentFrames)) {
      ++report.dropped_short;
      continue;
    }
    GestureSegment seg;
    seg.index = report.segments.size();
    seg.segment_id = make_segment_id(meta.utterance_id, seg.index);
    seg.series = mouth_frames_to_series(mouth, static_cast<std::size_t>(begin),
                                        static_cast<std::size_t>(end));
    seg.vowel = *vowel;
    seg.emotion = meta.emotion;
    seg.corpus_id = meta.corpus_id;
    seg.speaker_id = meta.speaker_id;
    seg.utterance_id = meta.utterance_id;
    seg.start_frame = static_cast<std::size_t>(begin);
    seg.frame_rate_hz = fps;
    report.segments.push_back(std::move(seg));
  }
  return report;
}

void write_segment_manifest(const std::filesystem::path& dir, const std::vector<GestureSegment>& segs,
                            const std::vector<Series>* acoustic) {
  io::ensure_dir(dir);
  std::string jsonl;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    const std::string stem = file_stem_for(s.segment_id);
    const std::string rel = "gesture/" + stem + ".csv";
    io::write_text(dir / rel, io::series_to_csv(s.series));
    nlohmann::ordered_json j;
    j["segment_id"] = s.segment_id;
    j["utterance_id"] = s.utterance_id;
    j["speaker_id"] = s.speaker_id;
    j["corpus"] = s.corpus_id;
    j["emotion"] = std::string(emotion_name(s.emotion));
    j["vowel"] = std::string(vowel_symbol(s.vowel));
    j["index"] = s.index;
    j["start_frame"] = s.start_frame;
    j["frames"] = s.series.frames();
    j["fps"] = s.frame_rate_hz;
    j["path"] = rel;
    if (acoustic) {
      const std::string arel = "acoustic/" + stem + ".csv";
      io::write_text(dir / arel, io::series_to_csv((*acoustic)[i]));
      j["acoustic_path"] = arel;
    }
    if (s.family >= 0) j["family"] = s.family;
    jsonl += j.dump();
    jsonl += '\n';
  }
  io::write_text(dir / "manifest.jsonl", jsonl);
}

std::vector<ManifestEntry> read_segment_manifest(const std::filesystem::path& manifest_path,
                                                 bool load_series) {
  std::istringstream in(io::read_text(manifest_path));
  const auto base = manifest_path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const std::string where = manifest_path.string() + ":" + std::to_string(lineno);
    ManifestEntry e;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& s = e.segment;
      s.segment_id = j.at("segment_id").get<std::string>();
      s.utterance_id = j.at("utterance_id").get<std::string>();
      s.speaker_id = j.value("speaker_id", std::string());
      s.corpus_id = j.at("corpus").get<std::string>();
      s.emotion = parse_emotion(j.at("emotion").get<std::string>());
      s.vowel = parse_vowel(j.at("vowel").get<std::string>());
      s.index = j.value("index", std::size_t{0});
      s.start_frame = j.value("start_frame", std::size_t{0});
      s.frame_rate_hz = j.value("fps", 30.0);
      s.family = j.value("family", -1);
      e.path = j.at("path").get<std::string>();
      e.acoustic_path = j.value("acoustic_path", std::string());
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::ParseError, where + ": " + ex.what());
    } catch (const Error& ex) {
      fail(ErrorCode::ParseError, where + ": " + ex.what());
    }
    if (load_series) {
      e.segment.series = io::read_series_csv(base / e.path);
      if (e.segment.series.frames() < kMinSegmentFrames || !e.segment.series.all_finite()) {
        fail(ErrorCode::DataError, where + ": segment needs >= 2 finite frames");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

Series load_acoustic(const std::filesystem::path& manifest_path, const ManifestEntry& e) {
  if (e.acoustic_path.empty()) {
    fail(ErrorCode::DataError, "segment " + e.segment.segment_id + " has no acoustic_path");
  }
  return io::read_series_csv(manifest_path.parent_path() / e.acoustic_path);
}

}  // namespace agcc

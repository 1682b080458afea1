// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "agcc/geometry.hpp"
#include "agcc/labels.hpp"
#include "agcc/series.hpp"

namespace agcc {

struct PhonemeInterval {
  std::string label;
  double start_sec = 0.0;
  double end_sec = 0.0;
};

// Segment matrices are T x 24, columns interleaved per mouth point:
// x48, y48, x49, y49, ..., x59, y59.
inline constexpr std::size_t kGestureDims = 2 * kMouthLandmarks;
inline constexpr std::size_t gesture_x_column(std::size_t landmark) { return 2 * (landmark - kMouthFirst); }
inline constexpr std::size_t gesture_y_column(std::size_t landmark) { return 2 * (landmark - kMouthFirst) + 1; }

struct GestureSegment {
  std::string segment_id;  // join key: <utterance_id>#<index>
  Series series;
  Vowel vowel = Vowel::A;
  Emotion emotion = Emotion::Neutral;
  std::string corpus_id;
  std::string speaker_id;
  std::string utterance_id;
  std::size_t index = 0;        // position among the utterance's emitted segments
  std::size_t start_frame = 0;
  double frame_rate_hz = 30.0;
  int family = -1;              // planted family of synthetic data, -1 when unknown
};

std::string make_segment_id(const std::string& utterance_id, std::size_t index);

/// TSV with header `label\tstart_sec\tend_sec`. Rows are returned sorted by
/// start time (stable). Rows overlapping by more than 1e-6 s raise
/// OverlapError; malformed rows raise ParseError with the line number.
std::vector<PhonemeInterval> parse_alignment(std::istream& in, const std::string& source_name);
std::vector<PhonemeInterval> parse_alignment_file(const std::filesystem::path& path);

/// Aligner label to vowel lookup. Stress digits are stripped before lookup.
class VowelAliasTable {
 public:
  VowelAliasTable();  // AA->A, AH->@, EH->E, IY->i, AE->ae, UW->u
  explicit VowelAliasTable(std::map<std::string, Vowel> table) : table_(std::move(table)) {}

  void set(const std::string& label, Vowel v) { table_[label] = v; }
  const std::map<std::string, Vowel>& entries() const { return table_; }

  // Returns the target vowel, or nullopt for labels outside the target set.
  // In strict mode a stress-marked label that is neither in the table nor a
  // known ARPAbet vowel raises ParseError.
  std::optional<Vowel> lookup(std::string_view label, bool strict) const;

 private:
  std::map<std::string, Vowel> table_;
};

struct SegmentMeta {
  Emotion emotion = Emotion::Neutral;
  std::string corpus_id;
  std::string speaker_id;
  std::string utterance_id;
};

struct CutReport {
  std::vector<GestureSegment> segments;
  std::size_t dropped_short = 0;   // target-vowel intervals with fewer than 2 frames
  std::size_t non_target = 0;      // intervals whose label is not a target vowel
};

inline constexpr std::size_t kMinSegmentFrames = 2;

/// One segment per target-vowel interval covering frames
/// [floor(start*fps), ceil(end*fps)) clamped to the sequence.
CutReport cut_segments(const MouthSequence& mouth, const std::vector<PhonemeInterval>& intervals,
                       const SegmentMeta& meta, const VowelAliasTable& aliases = {},
                       bool strict = false);

Series mouth_frames_to_series(const MouthSequence& mouth, std::size_t begin, std::size_t end);

// Segment manifest: JSON lines next to per-segment CSV matrices.
struct ManifestEntry {
  GestureSegment segment;
  std::string path;           // gesture matrix, relative to the manifest directory
  std::string acoustic_path;  // optional acoustic frame series
};

void write_segment_manifest(const std::filesystem::path& dir, const std::vector<GestureSegment>& segs,
                            const std::vector<Series>* acoustic = nullptr);
std::vector<ManifestEntry> read_segment_manifest(const std::filesystem::path& manifest_path,
                                                 bool load_series = true);
Series load_acoustic(const std::filesystem::path& manifest_path, const ManifestEntry& e);

}  // namespace agcc

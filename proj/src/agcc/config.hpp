// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agcc/anchoring.hpp"
#include "agcc/clustering.hpp"
#include "agcc/segmentation.hpp"
#include "agcc/synth.hpp"
#include "agcc/training.hpp"

namespace agcc {

namespace fs = std::filesystem;

struct PathsConfig {
  fs::path landmarks;             // directory of landmark CSVs
  fs::path alignments;            // directory of <utterance_id>.tsv
  fs::path utterances;            // CSV utterance_id,speaker_id,emotion,corpus
  fs::path segments;              // segment manifest.jsonl
  fs::path features;              // f32 matrix; sidecar at <features>.json
  fs::path labels;                // CSV sample_id,emotion,corpus
  fs::path assignments;           // AG cluster assignments CSV
  fs::path acoustic_assignments;  // acoustic cluster assignments CSV
  fs::path model;                 // cluster model directory
  fs::path weights;               // trained classifier directory
  fs::path resume;                // training checkpoint directory
};

struct ClusterSettings {
  std::size_t k = 10;
  std::optional<std::pair<std::size_t, std::size_t>> elbow;  // inclusive k range
  SoftDtwParams params{1.0};
  FitOptions fit;
};

struct SynthSettings {
  synth::SyntheticSpec spec;
  std::string coupling = "default";  // "default", "identity" or "matrix"
  std::size_t landmark_utterances = 0;  // per corpus; 0 skips landmark output
};

/// Effective configuration of one command: file values overridden by flags.
struct PipelineConfig {
  std::uint64_t seed = 0;
  fs::path out = "runs";
  AnchorMode mode = AnchorMode::Cluster;
  std::string source_corpus = "source";
  std::string target_corpus = "target";
  PathsConfig paths;
  VowelAliasTable vowels;
  bool strict_vowels = false;
  ClusterSettings cluster;
  double overlap_threshold = 25.0;
  AnchorLossConfig anchor;
  TrainConfig train;
  SplitConfig split;
  std::size_t stop_after = 0;  // interrupt training after this many epochs in this run (0: never)
  std::string evaluate_corpus = "target";
  SynthSettings synth;

  // Stable JSON of every field except `out`; the run directory hash covers it.
  std::string canonical_json() const;
  std::string hash() const;  // 16 hex digits
};

/// Builds the configuration from an optional TOML file and `section.key=value`
/// overrides applied in order. Override values are read as TOML literals and
/// fall back to plain strings. Relative paths in the file resolve against the
/// file's directory. Throws ConfigError on unknown keys, bad types, values
/// outside module invariants, or referenced paths that do not exist.
PipelineConfig load_pipeline_config(const std::optional<fs::path>& file,
                                    const std::vector<std::pair<std::string, std::string>>& overrides);

PipelineConfig parse_pipeline_config(const std::string& toml_text, const fs::path& base_dir,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace agcc

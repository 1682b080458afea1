// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agcc/config.hpp"
#include "agcc/labels.hpp"

namespace agcc {

enum class Command { Normalize, Segment, Cluster, Overlap, Associate, Train, Evaluate, Synth };

const char* command_name(Command c) noexcept;
std::optional<Command> parse_command(std::string_view name) noexcept;

struct RunResult {
  fs::path run_dir;
  std::string summary_json;
  std::vector<std::string> warnings;
};

// <out>/<command>-<config hash>
fs::path run_directory(const PipelineConfig& cfg, Command cmd);

/// Runs one command into its run directory. The directory always receives
/// run.json with the command, config hash, effective config, summary and a
/// creation timestamp (the only non-deterministic field).
RunResult run_command(Command cmd, const PipelineConfig& cfg);

// Feature matrices: little-endian f32 rows plus a JSON sidecar {n, d, ids}
// at the same path with extension ".json".
struct FeatureMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> values;  // row-major n x d
  std::vector<std::string> ids;
};

fs::path feature_sidecar(const fs::path& f32_path);
void write_features(const fs::path& f32_path, const FeatureMatrix& m);
FeatureMatrix read_features(const fs::path& f32_path);

// Labels CSV `sample_id,emotion,corpus`.
struct LabelRow {
  std::string sample_id;
  Emotion emotion = Emotion::Neutral;
  std::string corpus;
};

std::string labels_to_csv(const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_labels_csv(const fs::path& path);

/// Target-test UAR at the best-validation epoch of each history (JSON lines
/// as written by `train`) and their difference b - a, as JSON.
std::string compare_histories(const fs::path& a, const fs::path& b);

/// Digest of every file under `dir`, in relative-path order. JSON files are parsed
/// and re-dumped without their "created_utc" keys so timestamps do not count.
std::string content_hash(const fs::path& dir);

}  // namespace agcc

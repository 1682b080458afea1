// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agcc/anchoring.hpp"
#include "agcc/labels.hpp"
#include "agcc/mlp.hpp"

namespace agcc {

/// Mean per-class recall over `n_classes`; throws MissingClass when a class
/// has no support in `labels`.
double uar(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes = kEmotionCount);

enum class AnchorMode { None, Cluster, Vowel };
const char* anchor_mode_name(AnchorMode m) noexcept;
AnchorMode parse_anchor_mode(const std::string& s);  // "none" | "ag" | "hard-ag"

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 70;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64, 32};  // three hidden layers: a 4-layer head

  void validate() const;  // ConfigError
};

/// Row-major feature matrix with labels.
struct LabeledSet {
  std::vector<double> x;
  std::vector<int> y;
  std::size_t rows() const noexcept { return y.size(); }
};

struct TrainData {
  std::size_t dim = 0;
  LabeledSet source;        // cross-entropy set; also positives and negatives
  LabeledSet target_train;  // anchors
  LabeledSet target_val;    // early stopping
  LabeledSet target_test;   // final report
  std::vector<PoolItem> source_pool;        // one per source row
  std::vector<PoolItem> target_train_pool;  // one per target_train row
  std::size_t n_keys = 0;

  void validate() const;  // DataError
};

/// One labeled embedding with its anchoring keys.
struct FeatureRow {
  std::string id;
  std::vector<double> feature;
  Emotion emotion = Emotion::Neutral;
  bool target = false;
  int cluster = -1;
  Vowel vowel = Vowel::A;
};

struct SplitConfig {
  double val_fraction = 0.2;   // of the target corpus
  double test_fraction = 0.4;  // of the target corpus; the rest anchors
};

/// Stratified (per emotion) seeded split of the target rows; source rows all
/// go to the cross-entropy set. Pools are keyed by cluster, or by vowel for
/// AnchorMode::Vowel, and grouped by vowel.
TrainData assemble_train_data(const std::vector<FeatureRow>& rows, AnchorMode mode, std::size_t n_clusters,
                              const SplitConfig& split, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained network
  double loss_er = 0.0;
  double loss_ag = 0.0;   // mean per-triplet anchoring loss
  double loss_total = 0.0;
  double uar_val = 0.0;
  double uar_test = 0.0;
  std::size_t triplets = 0;
  double intra_cluster_distance = 0.0;  // see intra_cluster_distance()
};

std::string epoch_record_json(const EpochRecord& r);

struct TrainState {
  Mlp net;
  Adam opt;
  std::size_t epoch = 0;  // completed epochs
  double best_uar = -1.0;
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;
  bool stopped = false;
  std::vector<double> best_params;
  std::vector<EpochRecord> history;
};

struct TrainResult {
  Mlp net;  // best-validation weights
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double target_test_uar = 0.0;
  double target_val_uar = 0.0;
  bool early_stopped = false;
};

struct TrainHooks {
  // Called after every completed epoch; return false to interrupt.
  std::function<bool(const TrainState&)> on_epoch;
  // Called after every optimizer step with the current parameters.
  std::function<void(const std::vector<double>&)> on_step;
};

/// Cross-entropy on the source set plus gamma_total times the batch-mean
/// anchoring loss over triplets resampled every epoch, anchored on the
/// penultimate activations. Early stopping on target-validation UAR restores
/// the best weights. Passing `resume` continues an interrupted run.
TrainResult train(const TrainData& data, const CentroidGeometry* geometry, const AnchorLossConfig& cfg,
                  const TrainConfig& tcfg, AnchorMode mode, const TrainHooks& hooks = {},
                  std::optional<TrainState> resume = std::nullopt);

/// Mean over (emotion, key) pairs common for that emotion of the mean squared distance
/// between source and target-train embeddings in that group.
double intra_cluster_distance(const Mlp& net, const TrainData& data, const CommonKeys& common);

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state, const TrainConfig& tcfg);
TrainState load_checkpoint(const std::filesystem::path& dir);

void save_weights(const std::filesystem::path& dir, const Mlp& net);
Mlp load_weights(const std::filesystem::path& dir);

}  // namespace agcc

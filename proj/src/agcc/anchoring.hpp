// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agcc/clustering.hpp"
#include "agcc/labels.hpp"

namespace agcc {

struct AnchorLossConfig {
  double alpha = 0.3;
  double beta = 0.2;
  double gamma_total = 0.5;
  double threshold_percent = 25.0;
  bool hinge = true;
  bool negatives_common_only = true;

  void validate() const;  // ConfigError
};

/// Pairwise centroid soft-DTW distances scaled to [0, 1] by the largest pair.
/// The diagonal is zero; off-diagonal values below zero are clamped to zero.
class CentroidGeometry {
 public:
  explicit CentroidGeometry(const ClusterModel& model);

  std::size_t k() const noexcept { return k_; }
  double max_distance() const noexcept { return max_; }
  double raw_distance(int i, int n) const;
  double normalized_distance(int i, int n) const;
  // exp(-beta * normalized distance)
  double weight(int i, int n, double beta) const;

 private:
  std::size_t index(int i, int n) const;
  std::size_t k_ = 0;
  double max_ = 0.0;
  std::vector<double> raw_;
};

// One-off convenience over CentroidGeometry; throws UnknownCluster.
double centroid_weight(int cluster_i, int cluster_n, const ClusterModel& model, double beta);

/// Row indices into an embedding matrix.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double weight = 1.0;
};

struct AgLoss {
  double value = 0.0;
  std::size_t active = 0;     // triplets with a positive hinge argument
  std::vector<double> grad;   // same shape as the embedding matrix
};

/// Sum over triplets of h(|za - zp|^2 - w |za - zn|^2 + alpha) with h the
/// hinge (or identity when cfg.hinge is false), with the exact gradient
/// w.r.t. every row of `z` (row-major, n x dim). Throws EmptyBatch.
AgLoss ag_loss(std::span<const double> z, std::size_t dim, std::span<const Triplet> triplets,
               const AnchorLossConfig& cfg);

inline double total_loss(double ce, double ag, double gamma_total) { return ce + gamma_total * ag; }

/// Pool member: emotion, the anchoring key (cluster id, or vowel index in
/// the hard variant) and the cell the overlap rule is evaluated in (the
/// vowel, matching the per-vowel, per-emotion overlap table).
struct PoolItem {
  Emotion emotion = Emotion::Neutral;
  int key = 0;
  int group = 0;
};

/// Keys passing the overlap rule inside each (emotion, group) cell.
class CommonKeys {
 public:
  CommonKeys() = default;
  CommonKeys(std::span<const PoolItem> source, std::span<const PoolItem> target, std::size_t n_keys,
             double threshold_percent);

  bool in_cell(Emotion e, int group, int key) const;
  // common in at least one cell of emotion e
  bool in_emotion(Emotion e, int key) const;
  std::vector<int> keys_for(Emotion e) const;
  bool empty() const noexcept;

 private:
  std::size_t n_keys_ = 0;
  std::size_t n_groups_ = 0;
  std::vector<char> cell_;     // [emotion][group][key]
  std::vector<char> emotion_;  // [emotion][key]
};

/// anchor indexes the target pool, positive and negative the source pool.
struct TripletSample {
  std::vector<Triplet> triplets;
  std::vector<std::vector<int>> common_keys;  // per emotion, common in some cell
  std::size_t skipped = 0;     // target items that yield no triplet
  std::size_t not_common = 0;  // of those, items outside their emotion's common keys
};

/// Anchors must sit in a key that is common in their (emotion, group) cell.
/// Positives share key and emotion with the anchor; negatives share the
/// emotion under a different key that is common for that emotion (any key
/// when relaxed). With
/// count == 0 every valid anchor yields one triplet in pool order; otherwise
/// `count` anchors are drawn with replacement. `geometry` null means w = 1.
/// Throws NoCommonClusters when no cell has a common key.
TripletSample sample_triplets(std::span<const PoolItem> source, std::span<const PoolItem> target, std::size_t n_keys,
                              const CentroidGeometry* geometry, const AnchorLossConfig& cfg, std::uint64_t seed,
                              std::size_t count = 0);

}  // namespace agcc

// SPDX-License-Identifier: Apache-2.0
#include "agcc/anchoring.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "agcc/corpus_analysis.hpp"
#include "agcc/error.hpp"
#include "agcc/soft_dtw.hpp"

namespace agcc {

void AnchorLossConfig::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorCode::ConfigError, std::string(name) + " must be finite and >= 0");
  };
  check(alpha, "alpha");
  check(beta, "beta");
  check(gamma_total, "gamma_total");
  if (!std::isfinite(threshold_percent) || threshold_percent < 0.0 || threshold_percent > 100.0) {
    fail(ErrorCode::ConfigError, "threshold_percent must lie in [0, 100]");
  }
}

CentroidGeometry::CentroidGeometry(const ClusterModel& model) : k_(model.k()), raw_(k_ * k_, 0.0) {
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t n = i + 1; n < k_; ++n) {
      const double d = std::max(0.0, soft_dtw(model.centroids[i], model.centroids[n], model.params));
      raw_[i * k_ + n] = raw_[n * k_ + i] = d;
      max_ = std::max(max_, d);
    }
  }
}

std::size_t CentroidGeometry::index(int i, int n) const {
  if (i < 0 || n < 0 || static_cast<std::size_t>(i) >= k_ || static_cast<std::size_t>(n) >= k_) {
    fail(ErrorCode::UnknownCluster,
         "cluster pair (" + std::to_string(i) + ", " + std::to_string(n) + ") outside model with k=" +
             std::to_string(k_));
  }
  return static_cast<std::size_t>(i) * k_ + static_cast<std::size_t>(n);
}

double CentroidGeometry::raw_distance(int i, int n) const { return raw_[index(i, n)]; }

double CentroidGeometry::normalized_distance(int i, int n) const {
  const double d = raw_[index(i, n)];
  return max_ > 0.0 ? d / max_ : 0.0;
}

double CentroidGeometry::weight(int i, int n, double beta) const {
  return std::exp(-beta * normalized_distance(i, n));
}

double centroid_weight(int cluster_i, int cluster_n, const ClusterModel& model, double beta) {
  return CentroidGeometry(model).weight(cluster_i, cluster_n, beta);
}

AgLoss ag_loss(std::span<const double> z, std::size_t dim, std::span<const Triplet> triplets,
               const AnchorLossConfig& cfg) {
  if (triplets.empty()) fail(ErrorCode::EmptyBatch, "no triplets");
  if (dim == 0 || z.size() % dim != 0) fail(ErrorCode::DimensionMismatch, "embedding matrix shape");
  const std::size_t rows = z.size() / dim;
  AgLoss out;
  out.grad.assign(z.size(), 0.0);
  for (const auto& t : triplets) {
    if (t.anchor >= rows || t.positive >= rows || t.negative >= rows) {
      fail(ErrorCode::DimensionMismatch, "triplet row index out of range");
    }
    const double* a = z.data() + t.anchor * dim;
    const double* p = z.data() + t.positive * dim;
    const double* n = z.data() + t.negative * dim;
    double dp = 0.0, dn = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      dp += (a[j] - p[j]) * (a[j] - p[j]);
      dn += (a[j] - n[j]) * (a[j] - n[j]);
    }
    const double arg = dp - t.weight * dn + cfg.alpha;
    if (cfg.hinge && !(arg > 0.0)) continue;
    out.value += arg;
    ++out.active;
    double* ga = out.grad.data() + t.anchor * dim;
    double* gp = out.grad.data() + t.positive * dim;
    double* gn = out.grad.data() + t.negative * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      const double ep = 2.0 * (a[j] - p[j]);
      const double en = 2.0 * t.weight * (a[j] - n[j]);
      ga[j] += ep - en;
      gp[j] -= ep;
      gn[j] += en;
    }
  }
  return out;
}

CommonKeys::CommonKeys(std::span<const PoolItem> source, std::span<const PoolItem> target, std::size_t n_keys,
                       double threshold_percent)
    : n_keys_(n_keys) {
  for (auto pool : {source, target}) {
    for (const auto& p : pool) {
      if (p.key < 0 || static_cast<std::size_t>(p.key) >= n_keys) {
        fail(ErrorCode::UnknownCluster,
             "pool key " + std::to_string(p.key) + " outside [0, " + std::to_string(n_keys) + ")");
      }
      if (p.group < 0) fail(ErrorCode::DataError, "negative pool group");
      n_groups_ = std::max(n_groups_, static_cast<std::size_t>(p.group) + 1);
    }
  }
  const std::size_t cells = kEmotionCount * n_groups_;
  std::vector<std::vector<int>> ks(cells), kt(cells);
  auto cell_of = [&](const PoolItem& p) {
    return static_cast<std::size_t>(p.emotion) * n_groups_ + static_cast<std::size_t>(p.group);
  };
  for (const auto& p : source) ks[cell_of(p)].push_back(p.key);
  for (const auto& p : target) kt[cell_of(p)].push_back(p.key);
  cell_.assign(cells * n_keys, 0);
  emotion_.assign(kEmotionCount * n_keys, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    if (ks[c].empty() || kt[c].empty()) continue;
    for (int key : overlap_labels(ks[c], kt[c], n_keys, threshold_percent).common_clusters()) {
      cell_[c * n_keys + static_cast<std::size_t>(key)] = 1;
      emotion_[(c / n_groups_) * n_keys + static_cast<std::size_t>(key)] = 1;
    }
  }
}

bool CommonKeys::in_cell(Emotion e, int group, int key) const {
  if (group < 0 || static_cast<std::size_t>(group) >= n_groups_ || key < 0 || static_cast<std::size_t>(key) >= n_keys_) {
    return false;
  }
  const auto c = static_cast<std::size_t>(e) * n_groups_ + static_cast<std::size_t>(group);
  return cell_[c * n_keys_ + static_cast<std::size_t>(key)] != 0;
}

bool CommonKeys::in_emotion(Emotion e, int key) const {
  if (key < 0 || static_cast<std::size_t>(key) >= n_keys_) return false;
  return emotion_[static_cast<std::size_t>(e) * n_keys_ + static_cast<std::size_t>(key)] != 0;
}

std::vector<int> CommonKeys::keys_for(Emotion e) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < n_keys_; ++k) {
    if (in_emotion(e, static_cast<int>(k))) out.push_back(static_cast<int>(k));
  }
  return out;
}

bool CommonKeys::empty() const noexcept {
  return std::none_of(emotion_.begin(), emotion_.end(), [](char c) { return c != 0; });
}

TripletSample sample_triplets(std::span<const PoolItem> source, std::span<const PoolItem> target, std::size_t n_keys,
                              const CentroidGeometry* geometry, const AnchorLossConfig& cfg, std::uint64_t seed,
                              std::size_t count) {
  cfg.validate();
  if (source.empty() || target.empty()) fail(ErrorCode::EmptySet, "triplet pools must be non-empty");
  const CommonKeys common(source, target, n_keys, cfg.threshold_percent);
  if (common.empty()) fail(ErrorCode::NoCommonClusters, "no common clusters at the configured threshold");
  TripletSample out;
  for (auto e : kAllEmotions) out.common_keys.push_back(common.keys_for(e));

  // by_key_emotion[key][emotion] -> source indices
  std::vector<std::vector<std::vector<std::size_t>>> by(n_keys, std::vector<std::vector<std::size_t>>(kEmotionCount));
  for (std::size_t i = 0; i < source.size(); ++i) {
    by[static_cast<std::size_t>(source[i].key)][static_cast<std::size_t>(source[i].emotion)].push_back(i);
  }

  struct Candidate {
    std::size_t anchor;
    const std::vector<std::size_t>* positives;
    std::vector<std::size_t> negatives;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto key = static_cast<std::size_t>(target[i].key);
    const auto e = static_cast<std::size_t>(target[i].emotion);
    if (!common.in_cell(target[i].emotion, target[i].group, target[i].key)) {
      ++out.not_common;
      ++out.skipped;
      continue;
    }
    const auto& pos = by[key][e];
    std::vector<std::size_t> neg;
    for (std::size_t other = 0; other < n_keys; ++other) {
      if (other == key || (cfg.negatives_common_only && !common.in_emotion(target[i].emotion, static_cast<int>(other)))) continue;
      neg.insert(neg.end(), by[other][e].begin(), by[other][e].end());
    }
    if (pos.empty() || neg.empty()) {
      ++out.skipped;
      continue;
    }
    std::sort(neg.begin(), neg.end());
    candidates.push_back({i, &pos, std::move(neg)});
  }
  if (candidates.empty()) return out;

  std::mt19937_64 rng(seed);
  auto draw = [&](const Candidate& c) {
    std::uniform_int_distribution<std::size_t> up(0, c.positives->size() - 1);
    std::uniform_int_distribution<std::size_t> un(0, c.negatives.size() - 1);
    Triplet t;
    t.anchor = c.anchor;
    t.positive = (*c.positives)[up(rng)];
    t.negative = c.negatives[un(rng)];
    t.weight = geometry ? geometry->weight(target[c.anchor].key, source[t.negative].key, cfg.beta) : 1.0;
    out.triplets.push_back(t);
  };
  if (count == 0) {
    for (const auto& c : candidates) draw(c);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    for (std::size_t i = 0; i < count; ++i) draw(candidates[pick(rng)]);
  }
  return out;
}

}  // namespace agcc

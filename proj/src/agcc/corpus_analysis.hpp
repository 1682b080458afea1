// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agcc/clustering.hpp"
#include "agcc/labels.hpp"

namespace agcc {

struct ClusterOverlap {
  int cluster_id = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double share1 = 0.0;
  double share2 = 0.0;
  bool common = false;
};

struct OverlapReport {
  std::vector<ClusterOverlap> per_cluster;  // every cluster id in [0, k)
  std::size_t n1_total = 0;
  std::size_t n2_total = 0;
  std::size_t k_ct = 0;
  double sim_percent = 0.0;
  double threshold_percent = 25.0;
  bool warning = false;  // no common cluster survived the threshold

  std::vector<int> common_clusters() const;
};

/// Cross-corpus overlap from per-cluster counts. A cluster is common when it
/// is used by both corpora and its share is at least threshold/100 in each.
/// Sim averages min(share1, share2) * 100 over the common clusters.
OverlapReport overlap_counts(std::span<const std::size_t> counts1, std::span<const std::size_t> counts2,
                             double threshold_percent = 25.0);

OverlapReport overlap_labels(std::span<const int> clusters1, std::span<const int> clusters2, std::size_t k,
                             double threshold_percent = 25.0);

/// Throws ModelMismatch when the sets come from different models and
/// EmptyCorpus when either is empty.
OverlapReport overlap(const AssignmentSet& corpus1, const AssignmentSet& corpus2, double threshold_percent = 25.0);

std::string overlap_report_json(const OverlapReport& r);

struct AssociationMatrix {
  std::size_t n_rows = 0;  // AG clusters
  std::size_t n_cols = 0;  // acoustic clusters
  std::vector<std::size_t> counts;     // row-major
  std::vector<double> row_normalized;  // row-major, zero on empty rows
  std::vector<bool> empty_row;
  std::optional<Emotion> emotion;      // nullopt: all emotions

  std::size_t count(std::size_t r, std::size_t c) const { return counts[r * n_cols + c]; }
  double normalized(std::size_t r, std::size_t c) const { return row_normalized[r * n_cols + c]; }
  std::size_t total() const;
};

AssociationMatrix association_labels(std::span<const int> ag, std::span<const int> acoustic, std::size_t k_ag,
                                     std::size_t k_acoustic);

/// Joins the two assignment sets on segment id. `emotions` maps ids to labels
/// and is only consulted when a filter is given. Throws JoinError when the id
/// sets differ or a filtered id has no emotion.
AssociationMatrix association(const AssignmentSet& ag, const AssignmentSet& acoustic,
                              const std::map<std::string, Emotion>& emotions, std::optional<Emotion> emotion_filter);

/// Normalized entropy H(row) / log(n_cols) per row; NaN for empty rows.
std::vector<double> concentration(const AssociationMatrix& m);

std::string association_csv(const AssociationMatrix& m, bool normalized);
std::string association_json(const AssociationMatrix& m);

// One assigned segment for the per-vowel, per-emotion overlap table.
struct TaggedAssignment {
  int cluster_id = 0;
  int corpus = 0;  // 0 or 1
  Vowel vowel = Vowel::A;
  Emotion emotion = Emotion::Neutral;
};

struct OverlapTable {
  std::size_t k = 0;
  double threshold_percent = 25.0;
  // Indexed [vowel], pooled over emotions; nullopt when a corpus has no
  // samples for that cell.
  std::vector<std::optional<OverlapReport>> by_vowel;
  // Indexed [emotion][vowel].
  std::vector<std::vector<std::optional<OverlapReport>>> by_emotion;

  // Mean Sim over vowels that have samples in both corpora; nullopt if none.
  std::optional<double> emotion_average(Emotion e) const;
};

OverlapTable overlap_table(const std::vector<TaggedAssignment>& items, std::size_t k, double threshold_percent = 25.0);

/// Rows: one per cluster (min share x 100 for common clusters, blank
/// otherwise), a pooled Sim row, then one Sim row per emotion. Columns:
/// vowels, then the mean over vowels.
std::string overlap_table_csv(const OverlapTable& t);
std::string overlap_table_json(const OverlapTable& t);

}  // namespace agcc

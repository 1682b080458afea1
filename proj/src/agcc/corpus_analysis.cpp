// SPDX-License-Identifier: Apache-2.0
#include "agcc/corpus_analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "agcc/error.hpp"
#include "agcc/io.hpp"

namespace agcc {

namespace {

void check_threshold(double t) {
  if (!std::isfinite(t) || t < 0.0 || t > 100.0) {
    fail(ErrorCode::ConfigError, "threshold_percent must lie in [0, 100]");
  }
}

std::vector<std::size_t> tally(std::span<const int> clusters, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (int c : clusters) {
    if (c < 0 || static_cast<std::size_t>(c) >= k) {
      fail(ErrorCode::UnknownCluster, "cluster id " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

nlohmann::json report_to_json(const OverlapReport& r) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : r.per_cluster) {
    clusters.push_back({{"cluster_id", c.cluster_id},
                        {"n1", c.n1},
                        {"n2", c.n2},
                        {"share1", c.share1},
                        {"share2", c.share2},
                        {"common", c.common}});
  }
  return {{"clusters", clusters},   {"n1", r.n1_total},
          {"n2", r.n2_total},       {"k_ct", r.k_ct},
          {"sim_percent", r.sim_percent}, {"threshold_percent", r.threshold_percent},
          {"warning", r.warning}};
}

}  // namespace

std::vector<int> OverlapReport::common_clusters() const {
  std::vector<int> out;
  for (const auto& c : per_cluster) {
    if (c.common) out.push_back(c.cluster_id);
  }
  return out;
}

OverlapReport overlap_counts(std::span<const std::size_t> counts1, std::span<const std::size_t> counts2,
                             double threshold_percent) {
  check_threshold(threshold_percent);
  if (counts1.size() != counts2.size()) {
    fail(ErrorCode::ModelMismatch, "count vectors have different cluster counts");
  }
  OverlapReport r;
  r.threshold_percent = threshold_percent;
  for (auto n : counts1) r.n1_total += n;
  for (auto n : counts2) r.n2_total += n;
  if (r.n1_total == 0 || r.n2_total == 0) fail(ErrorCode::EmptyCorpus, "a corpus has no assigned samples");

  const double N1 = static_cast<double>(r.n1_total);
  const double N2 = static_cast<double>(r.n2_total);
  double sum = 0.0;
  for (std::size_t i = 0; i < counts1.size(); ++i) {
    ClusterOverlap c;
    c.cluster_id = static_cast<int>(i);
    c.n1 = counts1[i];
    c.n2 = counts2[i];
    c.share1 = static_cast<double>(c.n1) / N1;
    c.share2 = static_cast<double>(c.n2) / N2;
    // share >= t/100, compared as 100 n >= t N to keep integer percentages exact
    const bool above1 = 100.0 * static_cast<double>(c.n1) >= threshold_percent * N1;
    const bool above2 = 100.0 * static_cast<double>(c.n2) >= threshold_percent * N2;
    c.common = c.n1 > 0 && c.n2 > 0 && above1 && above2;
    if (c.common) {
      ++r.k_ct;
      sum += std::min(c.share1, c.share2);
    }
    r.per_cluster.push_back(c);
  }
  if (r.k_ct == 0) {
    r.sim_percent = 0.0;
    r.warning = true;
  } else {
    r.sim_percent = sum / static_cast<double>(r.k_ct) * 100.0;
  }
  return r;
}

OverlapReport overlap_labels(std::span<const int> clusters1, std::span<const int> clusters2, std::size_t k,
                             double threshold_percent) {
  const auto c1 = tally(clusters1, k);
  const auto c2 = tally(clusters2, k);
  return overlap_counts(c1, c2, threshold_percent);
}

OverlapReport overlap(const AssignmentSet& corpus1, const AssignmentSet& corpus2, double threshold_percent) {
  if (corpus1.model_id != corpus2.model_id || corpus1.k != corpus2.k) {
    fail(ErrorCode::ModelMismatch, "assignments come from different models (" + corpus1.model_id + " vs " +
                                       corpus2.model_id + ")");
  }
  if (corpus1.items.empty() || corpus2.items.empty()) fail(ErrorCode::EmptyCorpus, "empty assignment set");
  std::vector<int> a, b;
  for (const auto& it : corpus1.items) a.push_back(it.cluster_id);
  for (const auto& it : corpus2.items) b.push_back(it.cluster_id);
  return overlap_labels(a, b, corpus1.k, threshold_percent);
}

std::string overlap_report_json(const OverlapReport& r) { return report_to_json(r).dump(2) + "\n"; }

std::size_t AssociationMatrix::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

AssociationMatrix association_labels(std::span<const int> ag, std::span<const int> acoustic, std::size_t k_ag,
                                     std::size_t k_acoustic) {
  if (ag.size() != acoustic.size()) fail(ErrorCode::JoinError, "label arrays differ in length");
  AssociationMatrix m;
  m.n_rows = k_ag;
  m.n_cols = k_acoustic;
  m.counts.assign(k_ag * k_acoustic, 0);
  for (std::size_t i = 0; i < ag.size(); ++i) {
    const int r = ag[i], c = acoustic[i];
    if (r < 0 || static_cast<std::size_t>(r) >= k_ag || c < 0 || static_cast<std::size_t>(c) >= k_acoustic) {
      fail(ErrorCode::UnknownCluster, "cluster id out of range at sample " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(r) * k_acoustic + static_cast<std::size_t>(c)];
  }
  m.row_normalized.assign(m.counts.size(), 0.0);
  m.empty_row.assign(k_ag, false);
  for (std::size_t r = 0; r < k_ag; ++r) {
    std::size_t row_total = 0;
    for (std::size_t c = 0; c < k_acoustic; ++c) row_total += m.count(r, c);
    if (row_total == 0) {
      m.empty_row[r] = true;
      continue;
    }
    for (std::size_t c = 0; c < k_acoustic; ++c) {
      m.row_normalized[r * k_acoustic + c] = static_cast<double>(m.count(r, c)) / static_cast<double>(row_total);
    }
  }
  return m;
}

AssociationMatrix association(const AssignmentSet& ag, const AssignmentSet& acoustic,
                              const std::map<std::string, Emotion>& emotions, std::optional<Emotion> emotion_filter) {
  std::unordered_map<std::string, int> ac_by_id;
  for (const auto& it : acoustic.items) {
    if (!ac_by_id.emplace(it.segment_ref, it.cluster_id).second) {
      fail(ErrorCode::JoinError, "duplicate id in acoustic assignments: " + it.segment_ref);
    }
  }
  if (ag.items.size() != ac_by_id.size()) {
    fail(ErrorCode::JoinError, "assignment sets cover different samples (" + std::to_string(ag.items.size()) +
                                   " vs " + std::to_string(ac_by_id.size()) + ")");
  }
  std::vector<int> rows, cols;
  for (const auto& it : ag.items) {
    auto found = ac_by_id.find(it.segment_ref);
    if (found == ac_by_id.end()) fail(ErrorCode::JoinError, "no acoustic assignment for " + it.segment_ref);
    if (emotion_filter) {
      auto e = emotions.find(it.segment_ref);
      if (e == emotions.end()) fail(ErrorCode::JoinError, "no emotion label for " + it.segment_ref);
      if (e->second != *emotion_filter) continue;
    }
    rows.push_back(it.cluster_id);
    cols.push_back(found->second);
  }
  auto m = association_labels(rows, cols, ag.k, acoustic.k);
  m.emotion = emotion_filter;
  return m;
}

std::vector<double> concentration(const AssociationMatrix& m) {
  std::vector<double> out(m.n_rows, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    if (m.empty_row[r]) continue;
    if (m.n_cols < 2) {
      out[r] = 0.0;
      continue;
    }
    double h = 0.0;
    for (std::size_t c = 0; c < m.n_cols; ++c) {
      const double p = m.normalized(r, c);
      if (p > 0.0) h -= p * std::log(p);
    }
    out[r] = h / std::log(static_cast<double>(m.n_cols));
  }
  return out;
}

std::string association_csv(const AssociationMatrix& m, bool normalized) {
  std::ostringstream out;
  out << "ag_cluster";
  for (std::size_t c = 0; c < m.n_cols; ++c) out << ",ac_" << c;
  out << "\n";
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    out << r;
    for (std::size_t c = 0; c < m.n_cols; ++c) {
      out << ',';
      if (normalized) {
        out << io::format_double(m.normalized(r, c));
      } else {
        out << m.count(r, c);
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string association_json(const AssociationMatrix& m) {
  nlohmann::json counts = nlohmann::json::array(), norm = nlohmann::json::array();
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    std::vector<std::size_t> cr(m.counts.begin() + static_cast<std::ptrdiff_t>(r * m.n_cols),
                                m.counts.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.n_cols));
    std::vector<double> nr(m.row_normalized.begin() + static_cast<std::ptrdiff_t>(r * m.n_cols),
                           m.row_normalized.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.n_cols));
    counts.push_back(cr);
    norm.push_back(nr);
  }
  nlohmann::json conc = nlohmann::json::array();
  for (double v : concentration(m)) {
    if (std::isnan(v)) {
      conc.push_back(nullptr);
    } else {
      conc.push_back(v);
    }
  }
  std::vector<bool> empty(m.empty_row.begin(), m.empty_row.end());
  nlohmann::json j = {{"rows", m.n_rows},   {"cols", m.n_cols},        {"counts", counts},
                      {"row_normalized", norm}, {"empty_rows", empty}, {"concentration", conc}};
  j["emotion"] = m.emotion ? nlohmann::json(std::string(emotion_name(*m.emotion))) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

std::optional<double> OverlapTable::emotion_average(Emotion e) const {
  const auto& row = by_emotion.at(static_cast<std::size_t>(e));
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cell : row) {
    if (!cell) continue;
    sum += cell->sim_percent;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

OverlapTable overlap_table(const std::vector<TaggedAssignment>& items, std::size_t k, double threshold_percent) {
  check_threshold(threshold_percent);
  OverlapTable t;
  t.k = k;
  t.threshold_percent = threshold_percent;
  // counts[emotion or pooled][vowel][corpus][cluster]; index kEmotionCount is pooled
  std::vector<std::vector<std::array<std::vector<std::size_t>, 2>>> counts(
      kEmotionCount + 1,
      std::vector<std::array<std::vector<std::size_t>, 2>>(
          kVowelCount, {std::vector<std::size_t>(k, 0), std::vector<std::size_t>(k, 0)}));
  for (const auto& it : items) {
    if (it.corpus != 0 && it.corpus != 1) fail(ErrorCode::DataError, "corpus index must be 0 or 1");
    if (it.cluster_id < 0 || static_cast<std::size_t>(it.cluster_id) >= k) {
      fail(ErrorCode::UnknownCluster, "cluster id " + std::to_string(it.cluster_id) + " out of range");
    }
    const auto v = static_cast<std::size_t>(it.vowel);
    const auto c = static_cast<std::size_t>(it.cluster_id);
    const auto corpus = static_cast<std::size_t>(it.corpus);
    ++counts[static_cast<std::size_t>(it.emotion)][v][corpus][c];
    ++counts[kEmotionCount][v][corpus][c];
  }
  auto cell = [&](std::size_t e, std::size_t v) -> std::optional<OverlapReport> {
    const auto& pair = counts[e][v];
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t c = 0; c < k; ++c) {
      n1 += pair[0][c];
      n2 += pair[1][c];
    }
    if (n1 == 0 || n2 == 0) return std::nullopt;
    return overlap_counts(pair[0], pair[1], threshold_percent);
  };
  for (std::size_t v = 0; v < kVowelCount; ++v) t.by_vowel.push_back(cell(kEmotionCount, v));
  t.by_emotion.resize(kEmotionCount);
  for (std::size_t e = 0; e < kEmotionCount; ++e) {
    for (std::size_t v = 0; v < kVowelCount; ++v) t.by_emotion[e].push_back(cell(e, v));
  }
  return t;
}

std::string overlap_table_csv(const OverlapTable& t) {
  std::ostringstream out;
  out << "row";
  for (auto v : kAllVowels) out << ',' << vowel_symbol(v);
  out << ",mean\n";

  auto mean_of = [](const std::vector<double>& xs) -> std::string {
    if (xs.empty()) return "";
    double s = 0.0;
    for (double x : xs) s += x;
    return fixed1(s / static_cast<double>(xs.size()));
  };

  for (std::size_t c = 0; c < t.k; ++c) {
    out << "cluster_" << c;
    std::vector<double> present;
    for (const auto& cell : t.by_vowel) {
      out << ',';
      if (cell && cell->per_cluster[c].common) {
        const double v = std::min(cell->per_cluster[c].share1, cell->per_cluster[c].share2) * 100.0;
        out << fixed1(v);
        present.push_back(v);
      }
    }
    out << ',' << mean_of(present) << "\n";
  }
  auto sim_row = [&](const std::string& name, const std::vector<std::optional<OverlapReport>>& cells) {
    out << name;
    std::vector<double> present;
    for (const auto& cell : cells) {
      out << ',';
      if (cell) {
        out << fixed1(cell->sim_percent);
        present.push_back(cell->sim_percent);
      }
    }
    out << ',' << mean_of(present) << "\n";
  };
  sim_row("sim_all", t.by_vowel);
  for (auto e : kAllEmotions) sim_row("sim_" + std::string(emotion_name(e)), t.by_emotion[static_cast<std::size_t>(e)]);
  return out.str();
}

std::string overlap_table_json(const OverlapTable& t) {
  auto cells = [](const std::vector<std::optional<OverlapReport>>& row) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t v = 0; v < row.size(); ++v) {
      const std::string key(vowel_symbol(kAllVowels[v]));
      j[key] = row[v] ? report_to_json(*row[v]) : nlohmann::json(nullptr);
    }
    return j;
  };
  nlohmann::json j;
  j["k"] = t.k;
  j["threshold_percent"] = t.threshold_percent;
  j["pooled"] = cells(t.by_vowel);
  nlohmann::json by_e = nlohmann::json::object(), avg = nlohmann::json::object();
  for (auto e : kAllEmotions) {
    const std::string name(emotion_name(e));
    by_e[name] = cells(t.by_emotion[static_cast<std::size_t>(e)]);
    const auto a = t.emotion_average(e);
    avg[name] = a ? nlohmann::json(*a) : nlohmann::json(nullptr);
  }
  j["by_emotion"] = by_e;
  j["emotion_average"] = avg;
  return j.dump(2) + "\n";
}

}  // namespace agcc

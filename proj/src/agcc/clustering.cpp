// SPDX-License-Identifier: Apache-2.0
#include "agcc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "agcc/error.hpp"
#include "agcc/io.hpp"
#include "agcc/rng.hpp"

namespace agcc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(std::span<const Series* const> series, std::size_t dims) {
  for (const auto* s : series) {
    if (s->dims() != dims) {
      fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(dims) + " columns, found " +
                                             std::to_string(s->dims()));
    }
  }
}

struct Nearest {
  int cluster = 0;
  double distance = kInf;
};

Nearest nearest(const Series& s, const std::vector<Series>& centroids, const SoftDtwParams& p) {
  Nearest best;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = soft_dtw(s, centroids[c], p);
    if (d < best.distance) {  // strict: ties keep the lowest index
      best.distance = d;
      best.cluster = static_cast<int>(c);
    }
  }
  return best;
}

// k-means++ over the soft-DTW divergence D(x,c) = sdtw(x,c) - (sdtw(x,x) + sdtw(c,c))/2,
// which is zero for x == c; the raw soft-DTW value is not.
std::vector<std::size_t> plus_plus_seeds(std::span<const Series* const> series, std::size_t k,
                                         const SoftDtwParams& p, std::mt19937_64& rng) {
  const std::size_t n = series.size();
  std::vector<double> self(n);
  for (std::size_t i = 0; i < n; ++i) self[i] = soft_dtw(*series[i], *series[i], p);

  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  chosen.push_back(first(rng));
  taken[chosen.back()] = true;

  std::vector<double> closest(n, kInf);
  while (chosen.size() < k) {
    const std::size_t c = chosen.back();
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) {
        closest[i] = 0.0;
        continue;
      }
      const double div = soft_dtw(*series[i], *series[c], p) - 0.5 * (self[i] + self[c]);
      closest[i] = std::min(closest[i], std::max(0.0, div));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : closest[i];
    std::size_t pick = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || closest[i] <= 0.0) continue;
        pick = i;
        r -= closest[i];
        if (r <= 0.0) break;
      }
    }
    if (pick == n) {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> u(0, free.size() - 1);
      pick = free[u(rng)];
    }
    chosen.push_back(pick);
    taken[pick] = true;
  }
  return chosen;
}

FitResult fit_once(std::span<const Series* const> series, std::size_t k, const SoftDtwParams& params,
                   std::uint64_t seed, std::uint64_t restart, const FitOptions& opts) {
  const std::size_t n = series.size();
  const std::size_t length = median_length(series);
  auto rng = substream(seed, "clustering.init", restart);

  FitResult res;
  res.model.params = params;
  res.model.seed = seed;
  res.model.modality = opts.modality;
  for (std::size_t idx : plus_plus_seeds(series, k, params, rng)) {
    res.model.centroids.push_back(resample_linear(*series[idx], length));
  }
  auto& centroids = res.model.centroids;

  res.labels.assign(n, 0);
  res.distances.assign(n, 0.0);
  auto assign_all = [&]() {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto best = nearest(*series[i], centroids, params);
      changed |= best.cluster != res.labels[i];
      res.labels[i] = best.cluster;
      res.distances[i] = best.distance;
    }
    return changed;
  };
  auto inertia = [&]() {
    double s = 0.0;
    for (double d : res.distances) s += d;
    return s;
  };

  assign_all();
  res.model.inertia_history.push_back(inertia());

  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    std::vector<std::size_t> counts(k, 0);
    for (int l : res.labels) ++counts[static_cast<std::size_t>(l)];

    bool reseeded = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -kInf;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(res.labels[i])] > 1 && res.distances[i] > far_d) {
          far_d = res.distances[i];
          far = i;
        }
      }
      if (far == n) break;
      --counts[static_cast<std::size_t>(res.labels[far])];
      centroids[c] = resample_linear(*series[far], length);
      res.labels[far] = static_cast<int>(c);
      res.distances[far] = soft_dtw(*series[far], centroids[c], params);
      counts[c] = 1;
      reseeded = true;
      ++res.reseeded;
    }

    for (std::size_t c = 0; c < k; ++c) {
      std::vector<const Series*> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.labels[i] == static_cast<int>(c)) members.push_back(series[i]);
      }
      if (members.empty()) continue;
      BarycenterOptions bo;
      bo.length = length;
      bo.max_iter = opts.barycenter_iter;
      bo.step = opts.barycenter_step;
      bo.init = &centroids[c];
      centroids[c] = soft_dtw_barycenter(members, params, bo).center;
    }

    const bool changed = assign_all();
    res.model.inertia_history.push_back(inertia());
    res.iterations = it + 1;
    if (!changed && !reseeded) break;
  }
  return res;
}

}  // namespace

const char* modality_name(Modality m) noexcept {
  return m == Modality::Gesture ? "gesture" : "acoustic";
}

Modality parse_modality(const std::string& s) {
  if (s == "gesture") return Modality::Gesture;
  if (s == "acoustic") return Modality::Acoustic;
  fail(ErrorCode::ConfigError, "unknown modality '" + s + "'");
}

std::string ClusterModel::model_id() const {
  std::string bytes = io::format_double(params.gamma);
  for (const auto& c : centroids) {
    bytes += '|';
    for (double v : c.data()) {
      bytes += io::format_double(v);
      bytes += ',';
    }
  }
  return io::hex64(io::fnv1a64(bytes));
}

FitResult fit(std::span<const Series* const> series, std::size_t k, const SoftDtwParams& params,
              std::uint64_t seed, const FitOptions& opts) {
  if (k < 2) fail(ErrorCode::InsufficientRange, "k must be at least 2");
  if (series.size() < k) {
    fail(ErrorCode::TooFewSamples, std::to_string(series.size()) + " samples for k=" + std::to_string(k));
  }
  check_dims(series, series.front()->dims());
  for (const auto* s : series) {
    if (s->frames() < 1 || !s->all_finite()) fail(ErrorCode::NonFinite, "invalid training series");
  }
  FitResult best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.n_init); ++r) {
    auto res = fit_once(series, k, params, seed, r, opts);
    if (r == 0 || res.model.inertia_history.back() < best.model.inertia_history.back()) {
      best = std::move(res);
    }
  }
  return best;
}

std::vector<Assignment> predict(const ClusterModel& model, std::span<const Series* const> series) {
  if (model.k() == 0) fail(ErrorCode::ModelMismatch, "model has no centroids");
  check_dims(series, model.dims());
  std::vector<Assignment> out;
  out.reserve(series.size());
  for (const auto* s : series) {
    const auto best = nearest(*s, model.centroids, model.params);
    out.push_back({std::string(), best.cluster, best.distance});
  }
  return out;
}

AssignmentSet predict(const ClusterModel& model, std::span<const Series* const> series,
                      const std::vector<std::string>& ids) {
  if (ids.size() != series.size()) fail(ErrorCode::DataError, "id list does not match series list");
  AssignmentSet set;
  set.model_id = model.model_id();
  set.k = model.k();
  set.items = predict(model, series);
  for (std::size_t i = 0; i < ids.size(); ++i) set.items[i].segment_ref = ids[i];
  return set;
}

std::size_t elbow_from_curve(const std::vector<std::pair<std::size_t, double>>& curve) {
  if (curve.size() < 3) fail(ErrorCode::InsufficientRange, "elbow needs at least three k values");
  std::size_t best_k = curve[1].first;
  double best = -kInf;
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double d2 = curve[i - 1].second - 2.0 * curve[i].second + curve[i + 1].second;
    if (d2 > best) {
      best = d2;
      best_k = curve[i].first;
    }
  }
  return best_k;
}

ElbowResult elbow_select(std::span<const Series* const> series, std::size_t k_min, std::size_t k_max,
                         const SoftDtwParams& params, std::uint64_t seed, const FitOptions& opts) {
  if (k_max < k_min || k_max - k_min + 1 < 3 || k_min < 2) {
    fail(ErrorCode::InsufficientRange, "elbow range needs at least three k values starting at k >= 2");
  }
  if (series.size() < k_max) {
    fail(ErrorCode::TooFewSamples, std::to_string(series.size()) + " samples for k up to " +
                                       std::to_string(k_max));
  }
  ElbowResult r;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const auto f = fit(series, k, params, seed, opts);
    r.curve.emplace_back(k, f.model.inertia_history.back());
  }
  r.k_star = elbow_from_curve(r.curve);
  return r;
}

std::vector<ClusterProfile> cluster_profile(const ClusterModel& model, const std::vector<int>& labels,
                                            std::span<const Series* const> series,
                                            const std::vector<std::size_t>& columns) {
  if (labels.size() != series.size()) fail(ErrorCode::DataError, "labels do not match series");
  for (std::size_t c : columns) {
    if (c >= model.dims()) fail(ErrorCode::DimensionMismatch, "profile column out of range");
  }
  std::vector<ClusterProfile> out;
  for (std::size_t c = 0; c < model.k(); ++c) {
    ClusterProfile prof;
    prof.cluster_id = static_cast<int>(c);
    const std::size_t length = model.centroids[c].frames();
    std::vector<Series> members;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= model.k()) {
        fail(ErrorCode::UnknownCluster, "label out of range");
      }
      if (labels[i] == static_cast<int>(c)) members.push_back(resample_linear(*series[i], length));
    }
    prof.members = members.size();
    if (!members.empty()) {
      std::vector<CoordinateProfile> coords;
      const double n = static_cast<double>(members.size());
      for (std::size_t col : columns) {
        CoordinateProfile cp;
        cp.column = col;
        cp.mean.assign(length, 0.0);
        cp.stddev.assign(length, 0.0);
        for (std::size_t t = 0; t < length; ++t) {
          double sum = 0.0;
          for (const auto& m : members) sum += m(t, col);
          const double mean = sum / n;
          double var = 0.0;
          for (const auto& m : members) var += (m(t, col) - mean) * (m(t, col) - mean);
          cp.mean[t] = mean;
          cp.stddev[t] = std::sqrt(var / n);
        }
        coords.push_back(std::move(cp));
      }
      prof.coords = std::move(coords);
    }
    out.push_back(std::move(prof));
  }
  return out;
}

double cluster_purity(const std::vector<int>& clusters, const std::vector<int>& truth) {
  if (clusters.size() != truth.size() || clusters.empty()) return 0.0;
  std::map<int, std::map<int, std::size_t>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][truth[i]];
  std::size_t hit = 0;
  for (const auto& [c, row] : table) {
    std::size_t best = 0;
    for (const auto& [t, count] : row) best = std::max(best, count);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(clusters.size());
}

std::string model_header_json(const ClusterModel& model) {
  nlohmann::ordered_json j;
  j["k"] = model.k();
  j["gamma"] = model.params.gamma;
  j["seed"] = model.seed;
  j["modality"] = modality_name(model.modality);
  j["dims"] = model.dims();
  std::vector<std::size_t> lengths;
  std::vector<std::string> files;
  for (std::size_t c = 0; c < model.k(); ++c) {
    lengths.push_back(model.centroids[c].frames());
    files.push_back("centroid_" + std::to_string(c) + ".csv");
  }
  j["centroid_lengths"] = lengths;
  j["centroid_files"] = files;
  j["inertia_history"] = model.inertia_history;
  j["model_id"] = model.model_id();
  return j.dump(2) + "\n";
}

void save_model(const ClusterModel& model, const std::filesystem::path& dir) {
  io::ensure_dir(dir);
  io::write_text(dir / "model.json", model_header_json(model));
  for (std::size_t c = 0; c < model.k(); ++c) {
    io::write_text(dir / ("centroid_" + std::to_string(c) + ".csv"), io::series_to_csv(model.centroids[c]));
  }
}

ClusterModel load_model(const std::filesystem::path& dir) {
  ClusterModel m;
  try {
    const auto j = nlohmann::json::parse(io::read_text(dir / "model.json"));
    m.params.gamma = j.at("gamma").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.modality = parse_modality(j.at("modality").get<std::string>());
    m.inertia_history = j.value("inertia_history", std::vector<double>{});
    const auto files = j.at("centroid_files").get<std::vector<std::string>>();
    const auto lengths = j.at("centroid_lengths").get<std::vector<std::size_t>>();
    if (files.size() != j.at("k").get<std::size_t>() || lengths.size() != files.size()) {
      fail(ErrorCode::DataError, "model.json: k does not match centroid list");
    }
    for (std::size_t c = 0; c < files.size(); ++c) {
      m.centroids.push_back(io::read_series_csv(dir / files[c]));
      if (m.centroids.back().frames() != lengths[c]) {
        fail(ErrorCode::DataError, "centroid " + std::to_string(c) + " length disagrees with model.json");
      }
    }
    if (j.contains("model_id") && j["model_id"].get<std::string>() != m.model_id()) {
      fail(ErrorCode::ModelMismatch, "centroid files do not match model_id in " + (dir / "model.json").string());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, (dir / "model.json").string() + ": " + e.what());
  }
  return m;
}

std::string assignments_to_csv(const AssignmentSet& set) {
  std::string out = "segment_id,cluster_id,distance\n";
  for (const auto& a : set.items) {
    out += a.segment_ref + "," + std::to_string(a.cluster_id) + "," + io::format_double(a.distance) + "\n";
  }
  return out;
}

AssignmentSet read_assignments_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  AssignmentSet set;
  std::string line;
  std::size_t lineno = 0;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    if (lineno == 1) {
      if (io::trim(line) != "segment_id,cluster_id,distance") {
        fail(ErrorCode::ParseError, path.string() + ":1: unexpected header");
      }
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto cells = io::split(io::trim(line), ',');
    if (cells.size() != 3) fail(ErrorCode::ParseError, where + ": expected 3 fields");
    Assignment a;
    a.segment_ref = std::string(cells[0]);
    a.cluster_id = static_cast<int>(io::parse_int(cells[1], where));
    a.distance = io::parse_double(cells[2], where);
    if (a.cluster_id < 0) fail(ErrorCode::ParseError, where + ": negative cluster id");
    max_id = std::max(max_id, a.cluster_id);
    set.items.push_back(std::move(a));
  }
  set.k = static_cast<std::size_t>(max_id + 1);
  auto side = path;
  side.replace_extension(".json");
  if (std::filesystem::exists(side)) {
    try {
      const auto j = nlohmann::json::parse(io::read_text(side));
      set.model_id = j.at("model_id").get<std::string>();
      const auto k = j.at("k").get<std::size_t>();
      if (k < set.k) fail(ErrorCode::ParseError, side.string() + ": k is below the largest cluster id");
      set.k = k;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, side.string() + ": " + e.what());
    }
  }
  return set;
}

void write_assignments(const std::filesystem::path& path, const AssignmentSet& set) {
  io::write_text(path, assignments_to_csv(set));
  auto side = path;
  side.replace_extension(".json");
  nlohmann::ordered_json j = {{"model_id", set.model_id}, {"k", set.k}, {"n", set.items.size()}};
  io::write_text(side, j.dump() + "\n");
}

}  // namespace agcc

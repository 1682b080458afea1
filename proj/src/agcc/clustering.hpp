// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agcc/series.hpp"
#include "agcc/soft_dtw.hpp"

namespace agcc {

enum class Modality { Gesture, Acoustic };
const char* modality_name(Modality m) noexcept;
Modality parse_modality(const std::string& s);

/// Fitted time-series k-means model. Immutable after fit; all centroids
/// share one length (median training length).
struct ClusterModel {
  std::vector<Series> centroids;
  SoftDtwParams params;
  std::vector<double> inertia_history;
  std::uint64_t seed = 0;
  Modality modality = Modality::Gesture;

  std::size_t k() const noexcept { return centroids.size(); }
  std::size_t dims() const noexcept { return centroids.empty() ? 0 : centroids.front().dims(); }
  // Content hash of centroids and gamma; assignments carry it for model checks.
  std::string model_id() const;
};

struct Assignment {
  std::string segment_ref;
  int cluster_id = 0;
  double distance = 0.0;  // raw soft-DTW, may be negative
};

struct AssignmentSet {
  std::string model_id;
  std::size_t k = 0;
  std::vector<Assignment> items;
};

struct FitOptions {
  std::size_t max_iter = 50;
  std::size_t n_init = 1;             // independent seedings, lowest final inertia wins
  std::size_t barycenter_iter = 10;   // gradient steps per centroid update
  double barycenter_step = 0.25;
  Modality modality = Modality::Gesture;
};

struct FitResult {
  ClusterModel model;
  std::vector<int> labels;
  std::vector<double> distances;
  std::size_t iterations = 0;
  std::size_t reseeded = 0;  // empty-cluster reseeds over the whole run
};

/// Lloyd alternation under soft-DTW: k-means++ seeding (soft-DTW divergence
/// weights), argmin assignment with ties to the lowest index, warm-started
/// barycenter updates. Stops after max_iter or when assignments settle.
/// Throws TooFewSamples, DimensionMismatch, InsufficientRange (k < 2).
FitResult fit(std::span<const Series* const> series, std::size_t k, const SoftDtwParams& params,
              std::uint64_t seed, const FitOptions& opts = {});

std::vector<Assignment> predict(const ClusterModel& model, std::span<const Series* const> series);
AssignmentSet predict(const ClusterModel& model, std::span<const Series* const> series,
                      const std::vector<std::string>& ids);

struct ElbowResult {
  std::size_t k_star = 0;
  std::vector<std::pair<std::size_t, double>> curve;  // (k, final inertia)
};

/// Picks the interior k maximizing inertia(k-1) - 2 inertia(k) + inertia(k+1);
/// ties go to the smallest k. Needs at least three consecutive points.
std::size_t elbow_from_curve(const std::vector<std::pair<std::size_t, double>>& curve);

ElbowResult elbow_select(std::span<const Series* const> series, std::size_t k_min, std::size_t k_max,
                         const SoftDtwParams& params, std::uint64_t seed, const FitOptions& opts = {});

struct CoordinateProfile {
  std::size_t column = 0;
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation per frame
};

struct ClusterProfile {
  int cluster_id = 0;
  std::size_t members = 0;
  std::optional<std::vector<CoordinateProfile>> coords;  // empty cluster: nullopt
};

/// Per-cluster mean and standard deviation curves for the selected columns,
/// with members linearly resampled to the centroid length.
std::vector<ClusterProfile> cluster_profile(const ClusterModel& model, const std::vector<int>& labels,
                                            std::span<const Series* const> series,
                                            const std::vector<std::size_t>& columns);

double cluster_purity(const std::vector<int>& clusters, const std::vector<int>& truth);

// model.json plus centroid_<i>.csv inside `dir`.
void save_model(const ClusterModel& model, const std::filesystem::path& dir);
ClusterModel load_model(const std::filesystem::path& dir);
std::string model_header_json(const ClusterModel& model);

std::string assignments_to_csv(const AssignmentSet& set);
// Reads model_id and k from the sidecar (same path, ".json") when present;
// otherwise k is inferred from the largest cluster id.
AssignmentSet read_assignments_csv(const std::filesystem::path& path);
// CSV plus the {model_id, k, n} sidecar.
void write_assignments(const std::filesystem::path& path, const AssignmentSet& set);

}  // namespace agcc

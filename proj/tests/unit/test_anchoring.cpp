// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "agcc/anchoring.hpp"
#include "agcc/error.hpp"
#include "oracles.hpp"

using namespace agcc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

// Centroids on one line: constant series at levels 0, 1, 3, 6 so that the
// soft-DTW distances from centroid 0 grow with the level.
ClusterModel line_model() {
  ClusterModel m;
  for (double level : {0.0, 1.0, 3.0, 6.0}) m.centroids.push_back(Series(5, 2, level));
  m.params.gamma = 0.01;
  return m;
}

double loss_only(const std::vector<double>& z, std::size_t dim, const std::vector<Triplet>& ts,
                 const AnchorLossConfig& cfg) {
  return ag_loss(z, dim, ts, cfg).value;
}

}  // namespace

TEST_CASE("centroid weight law") {
  const auto m = line_model();
  const CentroidGeometry g(m);
  for (int i = 0; i < 4; ++i) CHECK(g.weight(i, i, 0.2) == 1.0);
  CHECK(g.normalized_distance(0, 3) == 1.0);
  CHECK(g.weight(0, 3, 0.2) == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));
  CHECK(g.weight(0, 3, 0.2) == doctest::Approx(0.8187).epsilon(1e-4));
  const double w1 = g.weight(0, 1, 0.2), w2 = g.weight(0, 2, 0.2), w3 = g.weight(0, 3, 0.2);
  CHECK(w1 > w2);
  CHECK(w2 > w3);
  for (int i = 0; i < 4; ++i) {
    for (int n = 0; n < 4; ++n) {
      const double w = g.weight(i, n, 0.2);
      CHECK(w > 0.0);
      CHECK(w <= 1.0);
      CHECK((w == 1.0) == (g.normalized_distance(i, n) == 0.0));
    }
  }
  CHECK(centroid_weight(1, 1, m, 0.2) == 1.0);
  CHECK(code_of([&] { g.weight(0, 4, 0.2); }) == ErrorCode::UnknownCluster);
  CHECK(code_of([&] { centroid_weight(-1, 0, m, 0.2); }) == ErrorCode::UnknownCluster);

  ClusterModel flat;
  flat.centroids = {Series(3, 1, 2.0), Series(3, 1, 2.0)};
  flat.params.gamma = 1e-3;
  // All pairs at distance zero after clamping: weights are exactly one.
  CHECK(CentroidGeometry(flat).weight(0, 1, 0.2) == 1.0);
}

TEST_CASE("ag loss closed cases") {
  AnchorLossConfig cfg;
  // z_a = z_p = z_n: every distance is zero, loss is alpha.
  std::vector<double> z = {1.0, 2.0, 1.0, 2.0, 1.0, 2.0};
  std::vector<Triplet> ts = {{0, 1, 2, 0.7}};
  CHECK(ag_loss(z, 2, ts, cfg).value == doctest::Approx(0.3));

  // z_a = z_p and w * d(a, n) >= alpha: hinged to zero.
  z = {0.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  ts = {{0, 1, 2, 0.5}};
  const auto r = ag_loss(z, 2, ts, cfg);
  CHECK(r.value == 0.0);
  CHECK(r.active == 0);
  for (double g : r.grad) CHECK(g == 0.0);

  // Without the hinge the same triplet is negative.
  AnchorLossConfig raw = cfg;
  raw.hinge = false;
  CHECK(ag_loss(z, 2, ts, raw).value == doctest::Approx(0.3 - 0.5));

  // alpha = 0, z_a = z_p, any negative: zero under the hinge.
  AnchorLossConfig zero = cfg;
  zero.alpha = 0.0;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> q = {n(rng), n(rng), 0.0, 0.0, n(rng), n(rng)};
    q[2] = q[0];
    q[3] = q[1];
    CHECK(ag_loss(q, 2, std::vector<Triplet>{{0, 1, 2, 0.9}}, zero).value == 0.0);
  }
  CHECK(code_of([&] { ag_loss(z, 2, std::vector<Triplet>{}, cfg); }) == ErrorCode::EmptyBatch);
}

TEST_CASE("ag loss gradient matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> uw(0.5, 1.0);
  for (int inst = 0; inst < 25; ++inst) {
    const std::size_t dim = 3 + inst % 4, rows = 9;
    std::vector<double> z(rows * dim);
    for (double& v : z) v = n(rng);
    std::vector<Triplet> ts;
    for (int t = 0; t < 6; ++t) {
      ts.push_back({rng() % rows, rng() % rows, rng() % rows, uw(rng)});
    }
    AnchorLossConfig cfg;
    cfg.alpha = 2.0;
    cfg.hinge = inst % 2 == 0;
    const auto r = ag_loss(z, dim, ts, cfg);
    std::vector<double> fd(z.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < z.size(); ++i) {
      auto zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      fd[i] = (loss_only(zp, dim, ts, cfg) - loss_only(zm, dim, ts, cfg)) / (2 * h);
    }
    CHECK(agcc::testing::relative_error(r.grad, fd) < 1e-4);
    CHECK(r.value >= (cfg.hinge ? 0.0 : -1e300));
  }
}

TEST_CASE("total loss") {
  CHECK(total_loss(1.0, 0.5, 0.5) == 1.25);
  CHECK(total_loss(0.8, 123.0, 0.0) == 0.8);
  // With a large mixing weight the anchoring term decides the ordering.
  const double a = total_loss(0.1, 1.0, 10.0), b = total_loss(2.0, 0.5, 10.0);
  CHECK(a > b);
  CHECK(total_loss(0.1, 1.0, 0.0) < total_loss(2.0, 0.5, 0.0));
}

TEST_CASE("forced triplets") {
  // Target: two anchors in clusters 0 and 1. Source offers exactly one
  // positive and one negative per anchor.
  std::vector<PoolItem> source = {{Emotion::Anger, 0}, {Emotion::Anger, 1}, {Emotion::Sadness, 0},
                                  {Emotion::Sadness, 1}};
  std::vector<PoolItem> target = {{Emotion::Anger, 0}, {Emotion::Sadness, 1}, {Emotion::Anger, 1},
                                  {Emotion::Sadness, 0}};
  AnchorLossConfig cfg;
  cfg.threshold_percent = 0.0;
  const auto ts = sample_triplets(source, target, 2, nullptr, cfg, 5);
  REQUIRE(ts.triplets.size() == 4);
  const std::size_t want[4][2] = {{0, 1}, {3, 2}, {1, 0}, {2, 3}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ts.triplets[i].anchor == i);
    CHECK(ts.triplets[i].positive == want[i][0]);
    CHECK(ts.triplets[i].negative == want[i][1]);
  }
  CHECK(ts.skipped == 0);
  for (const auto& t : ts.triplets) CHECK(t.weight == 1.0);
}

TEST_CASE("anchors without a source counterpart are skipped") {
  std::vector<PoolItem> source = {{Emotion::Anger, 0},   {Emotion::Anger, 1},   {Emotion::Anger, 0},
                                  {Emotion::Anger, 1},   {Emotion::Sadness, 0}, {Emotion::Sadness, 0}};
  // (Anger, 2): cluster absent from the source. (Happiness, 1): no source
  // support. (Sadness, 0): a positive exists but no negative.
  std::vector<PoolItem> target = {{Emotion::Anger, 0}, {Emotion::Happiness, 1}, {Emotion::Anger, 2},
                                  {Emotion::Anger, 1}, {Emotion::Sadness, 0}};
  AnchorLossConfig cfg;
  cfg.threshold_percent = 0.0;
  const auto ts = sample_triplets(source, target, 3, nullptr, cfg, 1);
  CHECK(ts.triplets.size() == 2);
  CHECK(ts.skipped == 3);
  CHECK(ts.not_common == 2);

  std::vector<PoolItem> disjoint = {{Emotion::Anger, 2}};
  CHECK(code_of([&] { sample_triplets(source, disjoint, 3, nullptr, cfg, 1); }) == ErrorCode::NoCommonClusters);
}

TEST_CASE("triplet invariants on random pools") {
  std::mt19937_64 rng(2);
  const auto model = line_model();
  const CentroidGeometry geo(model);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 4;
    std::vector<PoolItem> source(40 + rng() % 60), target(20 + rng() % 40);
    const int groups = 1 + trial % 3;
    for (auto& s : source) s = {static_cast<Emotion>(rng() % 4), static_cast<int>(rng() % k), static_cast<int>(rng() % groups)};
    for (auto& t : target) t = {static_cast<Emotion>(rng() % 4), static_cast<int>(rng() % k), static_cast<int>(rng() % groups)};
    AnchorLossConfig cfg;
    cfg.threshold_percent = static_cast<double>(rng() % 25);
    cfg.negatives_common_only = trial % 3 != 0;
    TripletSample ts;
    try {
      ts = sample_triplets(source, target, k, &geo, cfg, static_cast<std::uint64_t>(trial), trial % 2 ? 50 : 0);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoCommonClusters);
      continue;
    }
    CHECK(ts.skipped <= target.size());
    CHECK(ts.not_common <= ts.skipped);
    if (trial % 2 == 0) CHECK(ts.triplets.size() + ts.skipped == target.size());
    for (const auto& t : ts.triplets) {
      const auto& a = target[t.anchor];
      const auto& ck = ts.common_keys[static_cast<std::size_t>(a.emotion)];
      const std::set<int> common(ck.begin(), ck.end());
      CHECK(CommonKeys(source, target, k, cfg.threshold_percent).in_cell(a.emotion, a.group, a.key));
      const auto& p = source[t.positive];
      const auto& n = source[t.negative];
      CHECK(common.count(a.key) == 1);
      CHECK(p.key == a.key);
      CHECK(n.key != a.key);
      CHECK(p.emotion == a.emotion);
      CHECK(n.emotion == a.emotion);
      if (cfg.negatives_common_only) CHECK(common.count(n.key) == 1);
      CHECK(t.weight == geo.weight(a.key, n.key, cfg.beta));
      CHECK(t.weight > 0.0);
      CHECK(t.weight <= 1.0);
    }
    const auto again = sample_triplets(source, target, k, &geo, cfg, static_cast<std::uint64_t>(trial),
                                       trial % 2 ? 50 : 0);
    REQUIRE(again.triplets.size() == ts.triplets.size());
    for (std::size_t i = 0; i < ts.triplets.size(); ++i) {
      CHECK(again.triplets[i].positive == ts.triplets[i].positive);
      CHECK(again.triplets[i].negative == ts.triplets[i].negative);
    }
  }
}

TEST_CASE("vowel keys give at most six anchor groups and differ from cluster keys") {
  std::mt19937_64 rng(9);
  std::vector<PoolItem> src_c, tgt_c, src_v, tgt_v;
  for (int i = 0; i < 300; ++i) {
    const auto e = static_cast<Emotion>(rng() % 4);
    const int vowel = static_cast<int>(rng() % 6);
    const int cluster = static_cast<int>(rng() % 10);
    (i < 200 ? src_c : tgt_c).push_back({e, cluster});
    (i < 200 ? src_v : tgt_v).push_back({e, vowel});
  }
  AnchorLossConfig cfg;
  cfg.threshold_percent = 0.0;
  const auto hard = sample_triplets(src_v, tgt_v, 6, nullptr, cfg, 4);
  for (const auto& ck : hard.common_keys) CHECK(ck.size() <= 6);
  std::set<int> groups;
  for (const auto& t : hard.triplets) {
    groups.insert(tgt_v[t.anchor].key);
    CHECK(t.weight == 1.0);
  }
  CHECK(groups.size() <= 6);
  const auto soft = sample_triplets(src_c, tgt_c, 10, nullptr, cfg, 4);
  bool differ = soft.triplets.size() != hard.triplets.size();
  for (std::size_t i = 0; !differ && i < soft.triplets.size(); ++i) {
    differ = soft.triplets[i].positive != hard.triplets[i].positive || soft.triplets[i].negative != hard.triplets[i].negative;
  }
  CHECK(differ);
}

TEST_CASE("config validation") {
  AnchorLossConfig cfg;
  cfg.alpha = -0.1;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
  cfg = {};
  cfg.gamma_total = std::nan("");
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::ConfigError);
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <cstring>
#include <random>

#include "agcc/error.hpp"
#include "agcc/training.hpp"
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

// Small two-corpus problem: emotion means in 6 dims, target shifted; the key
// is e or e + 1 (mod 4) with probabilities 0.5 and 0.4.
std::vector<FeatureRow> toy_rows(std::uint64_t seed, std::size_t per_corpus) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<FeatureRow> rows;
  for (int corpus = 0; corpus < 2; ++corpus) {
    for (std::size_t i = 0; i < per_corpus; ++i) {
      FeatureRow r;
      const int e = static_cast<int>(i % 4);
      r.id = (corpus ? "t" : "s") + std::to_string(i);
      r.emotion = static_cast<Emotion>(e);
      r.target = corpus == 1;
      const auto roll = rng() % 10;
      r.cluster = roll < 5 ? e : roll < 9 ? (e + 1) % 4 : static_cast<int>(rng() % 4);
      r.vowel = static_cast<Vowel>(rng() % 6);
      r.feature.resize(6);
      for (std::size_t d = 0; d < 6; ++d) {
        r.feature[d] = 0.5 * n(rng) + (d == static_cast<std::size_t>(e) ? 1.5 : 0.0) + (corpus ? 0.8 : 0.0);
      }
      rows.push_back(r);
    }
  }
  return rows;
}

ClusterModel toy_model() {
  ClusterModel m;
  for (double level : {0.0, 1.0, 2.0, 4.0}) m.centroids.push_back(Series(4, 1, level));
  m.params.gamma = 0.1;
  return m;
}

}  // namespace

TEST_CASE("uar examples") {
  // class 0: 3/4, class 1: 1/2, class 2: 2/2, class 3: 0/2
  const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3};
  const std::vector<int> pred = {0, 0, 0, 1, 1, 0, 2, 2, 0, 1};
  CHECK(uar(pred, labels) == 0.5625);
  CHECK(uar(labels, labels) == 1.0);
  CHECK(code_of([] { uar(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}); }) == ErrorCode::MissingClass);
}

TEST_CASE("uar of random guessing") {
  std::mt19937_64 rng(5);
  std::vector<int> labels(10000), pred(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i % 4);
    pred[i] = static_cast<int>(rng() % 4);
  }
  CHECK(std::abs(uar(pred, labels) - 0.25) <= 0.02);
}

TEST_CASE("uar ignores duplication of one class") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> labels, pred;
    const std::size_t n = 8 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back(static_cast<int>(i % 4));
      pred.push_back(static_cast<int>(rng() % 4));
    }
    const int cls = static_cast<int>(rng() % 4);
    auto l2 = labels, p2 = pred;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == cls) {
        l2.push_back(labels[i]);
        p2.push_back(pred[i]);
      }
    }
    CHECK(uar(p2, l2) == doctest::Approx(uar(pred, labels)).epsilon(1e-12));
  }
}

TEST_CASE("total loss gradient through a tiny network") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int inst = 0; inst < 5; ++inst) {
    Mlp net({4, 8, 8, 8, 4});
    net.init(rng);
    for (double& p : net.params()) p += 0.05 * n(rng);  // nonzero biases
    const std::size_t B = 6, T = 4;
    std::vector<double> x(B * 4), xt(3 * T * 4);
    for (double& v : x) v = n(rng);
    for (double& v : xt) v = n(rng);
    std::vector<int> y(B);
    for (auto& v : y) v = static_cast<int>(rng() % 4);
    std::vector<Triplet> ts;
    for (std::size_t t = 0; t < T; ++t) ts.push_back({3 * t, 3 * t + 1, 3 * t + 2, 0.6 + 0.1 * static_cast<double>(t)});
    AnchorLossConfig cfg;
    cfg.alpha = 5.0;  // keep every hinge active away from the kink
    const double gamma = 0.7;

    auto loss = [&](const std::vector<double>& params) {
      Mlp m = net;
      m.params() = params;
      Mlp::Cache c, ct;
      m.forward(x, B, c);
      std::vector<double> d;
      const double ce = softmax_cross_entropy(c.logits(), y, 4, d);
      m.forward(xt, 3 * T, ct);
      const double ag = ag_loss(ct.embedding(), m.embedding_dim(), ts, cfg).value / static_cast<double>(T);
      return total_loss(ce, ag, gamma);
    };

    Mlp::Cache c, ct;
    net.forward(x, B, c);
    std::vector<double> d_logits;
    softmax_cross_entropy(c.logits(), y, 4, d_logits);
    std::vector<double> grad(net.params().size(), 0.0);
    net.backward(c, d_logits, {}, grad);
    net.forward(xt, 3 * T, ct);
    auto ag = ag_loss(ct.embedding(), net.embedding_dim(), ts, cfg);
    for (double& g : ag.grad) g *= gamma / static_cast<double>(T);
    net.backward(ct, {}, ag.grad, grad);

    const auto fd = agcc::testing::finite_difference(loss, net.params(), 1e-6);
    CHECK(agcc::testing::relative_error(grad, fd) < 1e-3);
  }
}

TEST_CASE("adam step matches the update rule") {
  Adam opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.5;
  std::vector<double> p = {1.0, -2.0};
  std::vector<double> g = {0.2, 0.0};
  opt.step(p, g);
  // first step: m_hat = g', v_hat = g'^2 so the move is lr * sign(g')
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.7 / (0.7 + 1e-8)));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1));
}

TEST_CASE("split is stratified and deterministic") {
  const auto rows = toy_rows(1, 200);
  const auto a = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 3);
  const auto b = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 3);
  CHECK(a.target_test.y == b.target_test.y);
  CHECK(a.target_test.x == b.target_test.x);
  CHECK(a.source.rows() == 200);
  CHECK(a.target_train.rows() + a.target_val.rows() + a.target_test.rows() == 200);
  CHECK(a.target_test.rows() == 80);
  CHECK(a.target_val.rows() == 40);
  CHECK(a.source_pool.size() == 200);
  CHECK(a.target_train_pool.size() == a.target_train.rows());
  const auto v = assemble_train_data(rows, AnchorMode::Vowel, 4, {}, 3);
  CHECK(v.n_keys == 6);
  CHECK(code_of([&] { assemble_train_data(rows, AnchorMode::Cluster, 4, {0.6, 0.5}, 3); }) == ErrorCode::ConfigError);
}

TEST_CASE("zero mixing weight reproduces plain cross-entropy bit for bit") {
  const auto rows = toy_rows(2, 160);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 9);
  const auto model = toy_model();
  const CentroidGeometry geo(model);
  TrainConfig tc;
  tc.seed = 4;
  tc.max_epochs = 6;
  tc.lr = 1e-3;
  AnchorLossConfig cfg;
  cfg.gamma_total = 0.0;
  std::vector<std::vector<double>> traj_a, traj_b;
  TrainHooks ha, hb;
  ha.on_step = [&](const std::vector<double>& p) { traj_a.push_back(p); };
  hb.on_step = [&](const std::vector<double>& p) { traj_b.push_back(p); };
  const auto a = train(data, &geo, cfg, tc, AnchorMode::Cluster, ha);
  const auto b = train(data, nullptr, cfg, tc, AnchorMode::None, hb);
  REQUIRE(traj_a.size() == traj_b.size());
  REQUIRE(!traj_a.empty());
  bool identical = true;
  for (std::size_t s = 0; s < traj_a.size(); ++s) {
    identical = identical && std::memcmp(traj_a[s].data(), traj_b[s].data(), traj_a[s].size() * sizeof(double)) == 0;
  }
  CHECK(identical);
  CHECK(a.target_test_uar == b.target_test_uar);
  CHECK(a.history.back().triplets > 0);
}

TEST_CASE("training history and early stopping") {
  const auto rows = toy_rows(3, 200);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 1);
  const auto model = toy_model();
  const CentroidGeometry geo(model);
  TrainConfig tc;
  tc.seed = 2;
  tc.max_epochs = 40;
  tc.patience = 3;
  tc.lr = 1e-2;
  const auto r = train(data, &geo, {}, tc, AnchorMode::Cluster);
  CHECK(r.history.front().epoch == 0);
  for (const auto& h : r.history) {
    CHECK(std::isfinite(h.loss_total));
    CHECK(h.loss_total == doctest::Approx(h.loss_er + 0.5 * h.loss_ag));
  }
  CHECK(r.best_epoch >= 1);
  if (r.early_stopped) CHECK(r.history.size() - 1 == r.best_epoch + tc.patience);
  CHECK(r.target_val_uar == doctest::Approx(r.history[r.best_epoch].uar_val));
  CHECK(r.target_test_uar > 0.4);

  const auto hard = train(assemble_train_data(rows, AnchorMode::Vowel, 4, {}, 1), nullptr, {}, tc, AnchorMode::Vowel);
  CHECK(hard.target_test_uar >= 0.0);
  CHECK(hard.history.size() > 1);
  CHECK(code_of([&] { train(data, nullptr, {}, tc, AnchorMode::Cluster); }) == ErrorCode::ConfigError);
}

TEST_CASE("interrupted training resumes identically") {
  const auto rows = toy_rows(4, 120);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 5);
  const auto model = toy_model();
  const CentroidGeometry geo(model);
  TrainConfig tc;
  tc.seed = 8;
  tc.max_epochs = 8;
  tc.patience = 100;
  tc.lr = 3e-3;
  const auto full = train(data, &geo, {}, tc, AnchorMode::Cluster);

  const auto dir = std::filesystem::temp_directory_path() / "agcc_ckpt_test";
  std::filesystem::remove_all(dir);
  TrainHooks stop;
  stop.on_epoch = [&](const TrainState& st) {
    save_checkpoint(dir, st, tc);
    return st.epoch < 3;
  };
  const auto part = train(data, &geo, {}, tc, AnchorMode::Cluster, stop);
  CHECK(part.history.size() == 4);
  auto state = load_checkpoint(dir);
  CHECK(state.epoch == 3);
  const auto resumed = train(data, &geo, {}, tc, AnchorMode::Cluster, {}, std::move(state));
  REQUIRE(resumed.history.size() == full.history.size());
  for (std::size_t i = 0; i < full.history.size(); ++i) {
    CHECK(epoch_record_json(resumed.history[i]) == epoch_record_json(full.history[i]));
  }
  CHECK(resumed.net.params() == full.net.params());

  save_weights(dir / "final", full.net);
  CHECK(load_weights(dir / "final").params() == full.net.params());
  std::filesystem::remove_all(dir);
}

TEST_CASE("intra-cluster distance matches pairwise enumeration") {
  const auto rows = toy_rows(6, 40);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 2);
  std::mt19937_64 rng(1);
  Mlp net({6, 8, 8, 5, 4});
  net.init(rng);
  const CommonKeys common(data.source_pool, data.target_train_pool, 4, 25.0);
  std::vector<std::vector<int>> keys;
  for (auto e : kAllEmotions) keys.push_back(common.keys_for(e));
  Mlp::Cache cs, ct;
  net.forward(data.source.x, data.source.rows(), cs);
  net.forward(data.target_train.x, data.target_train.rows(), ct);
  const std::size_t e = net.embedding_dim();
  double total = 0.0;
  std::size_t groups = 0;
  for (std::size_t emo = 0; emo < 4; ++emo) {
  for (int k : keys[emo]) {
    double s = 0.0;
    std::size_t pairs = 0;
    const auto in_group = [&](const PoolItem& p) { return p.key == k && static_cast<std::size_t>(p.emotion) == emo; };
    for (std::size_t i = 0; i < data.source_pool.size(); ++i) {
      if (!in_group(data.source_pool[i])) continue;
      for (std::size_t j = 0; j < data.target_train_pool.size(); ++j) {
        if (!in_group(data.target_train_pool[j])) continue;
        for (std::size_t d = 0; d < e; ++d) {
          const double diff = cs.embedding()[i * e + d] - ct.embedding()[j * e + d];
          s += diff * diff;
        }
        ++pairs;
      }
    }
    REQUIRE(pairs > 0);
    total += s / static_cast<double>(pairs);
    ++groups;
  }
  }
  REQUIRE(groups > 0);
  CHECK(intra_cluster_distance(net, data, common) == doctest::Approx(total / static_cast<double>(groups)).epsilon(1e-10));
}

// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Usage: acceptance [criterion numbers...]
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "agcc/anchoring.hpp"
#include "agcc/clustering.hpp"
#include "agcc/corpus_analysis.hpp"
#include "agcc/geometry.hpp"
#include "agcc/pipeline.hpp"
#include "agcc/soft_dtw.hpp"
#include "agcc/synth.hpp"
#include "agcc/training.hpp"
#include "cli_runner.hpp"
#include "faces.hpp"
#include "oracles.hpp"

using namespace agcc;
using namespace agcc::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// --- 1 ---------------------------------------------------------------------

Outcome soft_dtw_vs_hard() {
  const double t0 = cpu_seconds();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  const int pairs = 200;
  for (int i = 0; i < pairs; ++i) {
    const Series a = random_series(rng, 5 + rng() % 6, 2);
    const Series b = random_series(rng, 5 + rng() % 6, 2);
    const double hard = hard_dtw(a, b);
    const double soft = soft_dtw(a, b, {1e-3});
    worst = std::max(worst, std::abs(soft - hard) / std::max(1.0, std::abs(hard)));
  }
  const double secs = cpu_seconds() - t0;
  return {worst < 1e-2 && secs < 10.0,
          fmt("%d pairs, max relative error %.2e (< 1e-2), %.2f s CPU (< 10 s)", pairs, worst, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome gradients() {
  std::mt19937_64 rng(1002);
  double worst_sdtw = 0.0, worst_ag = 0.0;
  const int instances = 30;
  for (int inst = 0; inst < instances; ++inst) {
    const double gamma = inst % 3 == 0 ? 0.1 : 1.0;
    const Series a = random_series(rng, 3 + rng() % 8, 1 + rng() % 3);
    const Series b = random_series(rng, 3 + rng() % 8, a.dims());
    const Series g = soft_dtw_grad(a, b, {gamma});
    const auto fd = finite_difference(
        [&](const std::vector<double>& x) { return soft_dtw(Series(a.frames(), a.dims(), x), b, {gamma}); },
        a.data(), 1e-5);
    worst_sdtw = std::max(worst_sdtw, relative_error(g.data(), fd));
  }
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> uw(0.1, 1.0);
  for (int inst = 0; inst < instances; ++inst) {
    const std::size_t dim = 2 + inst % 6, rows = 12;
    std::vector<double> z(rows * dim);
    for (double& v : z) v = n(rng);
    std::vector<Triplet> ts;
    for (int t = 0; t < 8; ++t) ts.push_back({rng() % rows, rng() % rows, rng() % rows, uw(rng)});
    AnchorLossConfig cfg;
    cfg.alpha = 1.5;
    cfg.hinge = inst % 2 == 0;
    const auto r = ag_loss(z, dim, ts, cfg);
    const auto fd = finite_difference([&](const std::vector<double>& x) { return ag_loss(x, dim, ts, cfg).value; },
                                      z, 1e-6);
    worst_ag = std::max(worst_ag, relative_error(r.grad, fd));
  }
  return {worst_sdtw < 1e-3 && worst_ag < 1e-4,
          fmt("%d instances each: soft-DTW gradient rel err %.2e (< 1e-3), AG loss rel err %.2e (< 1e-4)", instances,
              worst_sdtw, worst_ag)};
}

// --- 3 ---------------------------------------------------------------------

Outcome clustering_recovery() {
  const double t0 = cpu_seconds();
  double min_purity = 1.0;
  bool monotone = true;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    synth::SyntheticSpec spec;
    spec.n_families = 3;
    spec.samples_per_family = 20;
    spec.noise_sigma = 0.05;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto ds = synth::generate(spec);
    std::vector<const Series*> p;
    std::vector<int> fam;
    for (const auto& s : ds.samples) {
      if (s.segment.corpus_id != spec.source_corpus) continue;
      p.push_back(&s.segment.series);
      fam.push_back(s.segment.family);
    }
    const auto fr = fit(p, 3, {1.0}, static_cast<std::uint64_t>(seed));
    min_purity = std::min(min_purity, purity(fr.labels, fam));
    const auto& h = fr.model.inertia_history;
    for (std::size_t i = 1; i < h.size(); ++i) monotone = monotone && h[i] <= h[i - 1];
  }
  const double secs = cpu_seconds() - t0;
  return {min_purity >= 0.9 && monotone && secs < 60.0,
          fmt("%d seeds: min purity %.3f (>= 0.9), inertia non-increasing: %s, %.2f s CPU (< 60 s)", seeds,
              min_purity, monotone ? "yes" : "no", secs)};
}

// --- 4 ---------------------------------------------------------------------

Outcome elbow_ten_families() {
  int hits = 0;
  std::string ks;
  for (int seed = 1; seed <= 5; ++seed) {
    synth::SyntheticSpec spec;
    spec.n_families = 10;
    spec.samples_per_family = 8;
    spec.noise_sigma = 0.05;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto ds = synth::generate(spec);
    std::vector<const Series*> p;
    for (const auto& s : ds.samples) {
      if (s.segment.corpus_id == spec.source_corpus) p.push_back(&s.segment.series);
    }
    FitOptions opts;
    opts.n_init = 3;
    const auto r = elbow_select(p, 5, 30, {1.0}, static_cast<std::uint64_t>(seed), opts);
    hits += r.k_star == 10;
    ks += (ks.empty() ? "" : ",") + std::to_string(r.k_star);
  }
  return {hits >= 4, fmt("k* per seed {%s}: %d of 5 equal 10 (>= 4)", ks.c_str(), hits)};
}

// --- 5 ---------------------------------------------------------------------

Outcome overlap_oracle() {
  std::mt19937_64 rng(1005);
  int exact = 0;
  const int configs = 50;
  for (int trial = 0; trial < configs; ++trial) {
    const std::size_t k = 2 + rng() % 15;
    std::vector<std::size_t> a(k), b(k);
    for (auto& x : a) x = rng() % 4 == 0 ? 0 : rng() % 120;
    for (auto& x : b) x = rng() % 4 == 0 ? 0 : rng() % 120;
    a[rng() % k] += 1;
    b[rng() % k] += 1;
    const int thr = static_cast<int>(rng() % 50);
    std::size_t kct = 0;
    const double want = brute_sim(a, b, thr, kct);
    const auto got = overlap_counts(a, b, thr);
    exact += got.sim_percent == want && got.k_ct == kct;
  }
  const std::vector<std::size_t> h1 = {60, 40, 0}, h2 = {50, 30, 20};
  const double hand = overlap_counts(h1, h2, 25.0).sim_percent;
  return {exact == configs && hand == 40.0,
          fmt("%d of %d random configurations identical to brute force; hand example Sim = %.10g (40.0)", exact,
              configs, hand)};
}

// --- 6 ---------------------------------------------------------------------

Outcome weight_law() {
  // Constant centroids at increasing levels: soft-DTW distance from centroid 0
  // grows with the level.
  ClusterModel m;
  for (double level : {0.0, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0}) m.centroids.push_back(Series(6, 2, level));
  m.params.gamma = 0.01;
  const CentroidGeometry g(m);
  bool ok = true;
  std::string why;
  for (double beta : {0.05, 0.2, 1.0, 5.0}) {
    for (int i = 0; i < static_cast<int>(m.k()); ++i) {
      if (g.weight(i, i, beta) != 1.0) ok = false, why = "self weight != 1";
      for (int n = 0; n < static_cast<int>(m.k()); ++n) {
        const double w = g.weight(i, n, beta);
        if (!(w > 0.0 && w <= 1.0)) ok = false, why = "weight outside (0,1]";
      }
    }
    for (int n = 1; n + 1 < static_cast<int>(m.k()); ++n) {
      if (!(g.weight(0, n, beta) > g.weight(0, n + 1, beta))) ok = false, why = "not strictly decreasing";
    }
  }
  return {ok, ok ? "w = 1 on the diagonal, strictly decreasing over 7 ordered centroids, in (0,1] for 4 betas"
                 : why};
}

// --- 7 ---------------------------------------------------------------------

struct TransferRun {
  double uar_ag = 0.0, uar_base = 0.0, intra0 = 0.0, intra_final = 0.0;
};

TransferRun transfer_seed(std::uint64_t seed) {
  synth::SyntheticSpec spec;
  spec.n_families = 8;
  spec.samples_per_family = 200;
  spec.cross_corpus_shift = 5.0;
  spec.feature_noise = 0.3;
  spec.coupling = synth::identity_coupling(spec.n_families);
  spec.seed = seed;
  const auto ds = synth::generate(spec);
  std::vector<const Series*> src, all;
  for (const auto& s : ds.samples) {
    all.push_back(&s.segment.series);
    if (s.segment.corpus_id == spec.source_corpus) src.push_back(&s.segment.series);
  }
  const auto fr = fit(src, spec.n_families, {1.0}, seed);
  const auto asg = predict(fr.model, all);
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    FeatureRow r;
    r.id = s.segment.segment_id;
    r.feature.assign(s.feature.begin(), s.feature.end());
    r.emotion = s.segment.emotion;
    r.target = s.segment.corpus_id == spec.target_corpus;
    r.cluster = asg[i].cluster_id;
    r.vowel = s.segment.vowel;
    rows.push_back(std::move(r));
  }
  const CentroidGeometry geo(fr.model);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, spec.n_families, {}, seed);
  TrainConfig tc;
  tc.seed = seed;
  tc.lr = 1e-4;
  AnchorLossConfig ag;
  ag.gamma_total = 0.5;
  AnchorLossConfig base = ag;
  base.gamma_total = 0.0;
  const auto a = train(data, &geo, ag, tc, AnchorMode::Cluster);
  const auto b = train(data, &geo, base, tc, AnchorMode::Cluster);
  return {a.target_test_uar, b.target_test_uar, a.history.front().intra_cluster_distance,
          a.history.back().intra_cluster_distance};
}

Outcome transfer_benefit() {
  const double t0 = cpu_seconds();
  double ag = 0, base = 0, i0 = 0, i1 = 0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto r = transfer_seed(static_cast<std::uint64_t>(seed));
    ag += r.uar_ag / seeds;
    base += r.uar_base / seeds;
    i0 += r.intra0 / seeds;
    i1 += r.intra_final / seeds;
  }
  const double secs = cpu_seconds() - t0;
  const double gain_pp = 100.0 * (ag - base);
  const double drop = i0 > 0 ? 1.0 - i1 / i0 : 0.0;
  return {gain_pp >= 2.0 && drop >= 0.2 && secs < 300.0,
          fmt("mean target UAR %.4f vs gamma=0 %.4f (+%.2f pp, >= 2), intra-cluster distance %.3f -> %.3f "
              "(-%.1f%%, >= 20%%), %.1f s CPU (< 300 s)",
              ag, base, gain_pp, i0, i1, 100.0 * drop, secs)};
}

// --- 8 ---------------------------------------------------------------------

Outcome ablation_identity() {
  synth::SyntheticSpec spec;
  spec.n_families = 4;
  spec.samples_per_family = 60;
  spec.seed = 8;
  const auto ds = synth::generate(spec);
  std::vector<FeatureRow> rows;
  for (const auto& s : ds.samples) {
    FeatureRow r;
    r.id = s.segment.segment_id;
    r.feature.assign(s.feature.begin(), s.feature.end());
    r.emotion = s.segment.emotion;
    r.target = s.segment.corpus_id == spec.target_corpus;
    r.cluster = s.segment.family;
    r.vowel = s.segment.vowel;
    rows.push_back(std::move(r));
  }
  ClusterModel m;
  for (int f = 0; f < 4; ++f) m.centroids.push_back(Series(4, 1, static_cast<double>(f)));
  m.params.gamma = 0.1;
  const CentroidGeometry geo(m);
  const auto data = assemble_train_data(rows, AnchorMode::Cluster, 4, {}, 8);
  TrainConfig tc;
  tc.seed = 8;
  tc.max_epochs = 10;
  AnchorLossConfig cfg;
  cfg.gamma_total = 0.0;
  std::vector<std::vector<double>> ta, tb;
  TrainHooks ha, hb;
  ha.on_step = [&](const std::vector<double>& p) { ta.push_back(p); };
  hb.on_step = [&](const std::vector<double>& p) { tb.push_back(p); };
  train(data, &geo, cfg, tc, AnchorMode::Cluster, ha);
  train(data, nullptr, cfg, tc, AnchorMode::None, hb);
  bool same = ta.size() == tb.size() && !ta.empty();
  for (std::size_t s = 0; same && s < ta.size(); ++s) {
    same = ta[s].size() == tb[s].size() &&
           std::memcmp(ta[s].data(), tb[s].data(), ta[s].size() * sizeof(double)) == 0;
  }
  return {same, fmt("%zu optimizer steps compared bytewise: %s", ta.size(), same ? "identical" : "DIFFERENT")};
}

// --- 9 ---------------------------------------------------------------------

Outcome uar_checks() {
  // per class correct: 3 of 4, 1 of 2, 2 of 2, 0 of 2
  const std::vector<int> labels = {0, 0, 0, 0, 1, 1, 2, 2, 3, 3};
  const std::vector<int> pred = {0, 0, 0, 2, 1, 3, 2, 2, 1, 0};
  const double hand = uar(pred, labels);
  std::mt19937_64 rng(1009);
  int held = 0;
  const int sets = 100;
  for (int t = 0; t < sets; ++t) {
    std::vector<int> l, p;
    const std::size_t n = 4 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      l.push_back(i < 4 ? static_cast<int>(i) : static_cast<int>(rng() % 4));
      p.push_back(static_cast<int>(rng() % 4));
    }
    // Recall per class from first principles, then compare against the
    // library on a copy where one class is repeated `times` times.
    const int cls = static_cast<int>(rng() % 4);
    const std::size_t times = 2 + rng() % 4;
    auto l2 = l, p2 = p;
    for (std::size_t r = 1; r < times; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        if (l[i] == cls) l2.push_back(l[i]), p2.push_back(p[i]);
      }
    }
    double recall_sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      double tot = 0, hit = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (l[i] != c) continue;
        ++tot;
        hit += p[i] == c;
      }
      recall_sum += hit / tot;
    }
    const double oracle = recall_sum / 4.0;
    const double a = uar(p, l), b = uar(p2, l2);
    held += std::abs(a - b) <= 1e-12 && std::abs(a - oracle) <= 1e-12;
  }
  return {hand == 0.5625 && held == sets,
          fmt("hand example UAR = %.10g (0.5625 exactly); duplication invariance held on %d of %d label sets", hand,
              held, sets)};
}

// --- 10 --------------------------------------------------------------------

Outcome geometry() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.05, 400.0);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  double idem = 0.0, inv = 0.0, ipd = 0.0;
  const int faces = 100;
  for (int t = 0; t < faces; ++t) {
    const FaceFrame base = similarity(canonical_face(rng), angle(rng), scale(rng), shift(rng), shift(rng));
    const FaceFrame n = normalize_frame(base);
    idem = std::max(idem, max_diff(normalize_frame(n), n));
    const FaceFrame moved = similarity(base, angle(rng), scale(rng), shift(rng), shift(rng));
    inv = std::max(inv, max_diff(normalize_frame(moved), n));
    double lx = 0, ly = 0, rx = 0, ry = 0;
    for (int i = 0; i < 6; ++i) {
      lx += n[36 + i].x / 6.0;
      ly += n[36 + i].y / 6.0;
      rx += n[42 + i].x / 6.0;
      ry += n[42 + i].y / 6.0;
    }
    ipd = std::max(ipd, std::abs(std::hypot(rx - lx, ry - ly) - 1.0));
  }
  return {idem <= 1e-7 && inv <= 1e-7 && ipd <= 1e-9,
          fmt("%d faces: idempotence %.1e, similarity invariance %.1e (<= 1e-7), |IPD - 1| %.1e (<= 1e-9)", faces,
              idem, inv, ipd)};
}

// --- 11 --------------------------------------------------------------------

Outcome cli_determinism() {
  const auto out = std::filesystem::temp_directory_path() / "agcc_acceptance_cli";
  std::filesystem::remove_all(out);
  const auto a = run_full_pipeline(AGCC_CLI_PATH, out);
  std::map<std::string, std::string> first;
  for (const auto& [name, r] : a) {
    if (r.exit_code != 0) return {false, name + " failed: " + r.err};
    first[name] = content_hash(r.run_dir);
  }
  const auto b = run_full_pipeline(AGCC_CLI_PATH, out);
  std::set<std::string> commands;
  int same = 0;
  for (const auto& [name, r] : b) {
    if (r.exit_code != 0) return {false, name + " failed on rerun: " + r.err};
    const bool eq = r.run_dir == a.at(name).run_dir && content_hash(r.run_dir) == first[name];
    same += eq;
    commands.insert(name.substr(0, name.find('_')));
  }
  const bool all = a.size() == b.size() && same == static_cast<int>(b.size()) && commands.size() == 8;
  return {all, fmt("%d of %zu runs covering %zu commands reproduced their content hash", same, b.size(),
                   commands.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"soft-DTW agrees with hard DTW at small gamma", soft_dtw_vs_hard},
      {"analytic gradients match finite differences", gradients},
      {"three planted families are recovered", clustering_recovery},
      {"elbow selects ten planted families", elbow_ten_families},
      {"overlap similarity equals brute force", overlap_oracle},
      {"centroid weight law", weight_law},
      {"anchoring improves synthetic transfer", transfer_benefit},
      {"zero anchoring weight equals plain cross-entropy", ablation_identity},
      {"UAR hand example and duplication invariance", uar_checks},
      {"face normalization properties", geometry},
      {"every CLI command is deterministic", cli_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2d  %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

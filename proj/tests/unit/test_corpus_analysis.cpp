// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "agcc/corpus_analysis.hpp"
#include "agcc/error.hpp"
#include "agcc/io.hpp"
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

AssignmentSet make_set(const std::vector<int>& labels, std::size_t k, const std::string& model = "m",
                       const std::string& prefix = "s") {
  AssignmentSet s;
  s.model_id = model;
  s.k = k;
  for (std::size_t i = 0; i < labels.size(); ++i) s.items.push_back({prefix + std::to_string(i), labels[i], 0.0});
  return s;
}

}  // namespace

TEST_CASE("hand example gives 40") {
  const std::vector<std::size_t> c1 = {60, 40, 0}, c2 = {50, 30, 20};
  const auto r = overlap_counts(c1, c2, 25.0);
  CHECK(r.sim_percent == 40.0);
  CHECK(r.k_ct == 2);
  CHECK(r.per_cluster[0].common);
  CHECK(r.per_cluster[1].common);
  CHECK_FALSE(r.per_cluster[2].common);
  CHECK(r.n1_total == 100);
  CHECK(r.n2_total == 100);
  CHECK_FALSE(r.warning);
}

TEST_CASE("perfect and disjoint overlap") {
  const std::vector<int> a(30, 2), b(17, 2);
  const auto r = overlap_labels(a, b, 4);
  CHECK(r.sim_percent == 100.0);
  CHECK(r.k_ct == 1);

  const std::vector<int> c = {0, 0, 1}, d = {2, 3, 3};
  const auto z = overlap_labels(c, d, 4);
  CHECK(z.k_ct == 0);
  CHECK(z.sim_percent == 0.0);
  CHECK(z.warning);
}

TEST_CASE("overlap equals brute force on random counts") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 12;
    std::vector<std::size_t> a(k), b(k);
    for (auto& x : a) x = rng() % 3 == 0 ? 0 : rng() % 80;
    for (auto& x : b) x = rng() % 3 == 0 ? 0 : rng() % 80;
    a[0] += 1;
    b[0] += 1;
    const int thr = static_cast<int>(rng() % 40);
    std::size_t kct = 0;
    const double expect = agcc::testing::brute_sim(a, b, thr, kct);
    const auto r = overlap_counts(a, b, thr);
    CHECK(r.sim_percent == expect);
    CHECK(r.k_ct == kct);
    std::size_t marked = 0, s1 = 0, s2 = 0;
    for (const auto& c : r.per_cluster) {
      marked += c.common ? 1 : 0;
      s1 += c.n1;
      s2 += c.n2;
    }
    CHECK(marked == r.k_ct);
    CHECK(s1 == r.n1_total);
    CHECK(s2 == r.n2_total);
    CHECK(r.sim_percent >= 0.0);
    CHECK(r.sim_percent <= 100.0);
  }
}

TEST_CASE("overlap properties") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 3 + rng() % 8;
    std::vector<int> a(20 + rng() % 200), b(20 + rng() % 200);
    for (auto& x : a) x = static_cast<int>(rng() % k);
    for (auto& x : b) x = static_cast<int>(rng() % (k - 1));
    const double thr = static_cast<double>(rng() % 30);
    const auto ab = overlap_labels(a, b, k, thr);
    const auto ba = overlap_labels(b, a, k, thr);
    CHECK(ab.sim_percent == doctest::Approx(ba.sim_percent).epsilon(1e-12));
    CHECK(ab.k_ct == ba.k_ct);

    std::vector<int> aa = a;
    aa.insert(aa.end(), a.begin(), a.end());
    CHECK(overlap_labels(aa, b, k, thr).sim_percent == doctest::Approx(ab.sim_percent).epsilon(1e-12));

    std::size_t last = k + 1;
    for (double t = 0.0; t <= 100.0; t += 5.0) {
      const auto kct = overlap_labels(a, b, k, t).k_ct;
      CHECK(kct <= last);
      last = kct;
    }
  }
}

TEST_CASE("overlap errors") {
  const auto a = make_set({0, 1}, 3, "m1"), b = make_set({0}, 3, "m2"), e = make_set({}, 3, "m1");
  CHECK(code_of([&] { overlap(a, b); }) == ErrorCode::ModelMismatch);
  CHECK(code_of([&] { overlap(a, e); }) == ErrorCode::EmptyCorpus);
  CHECK(code_of([&] { overlap(a, a, 120.0); }) == ErrorCode::ConfigError);
  CHECK(overlap(a, a).sim_percent == 50.0);
}

TEST_CASE("association of a deterministic mapping is one-to-one") {
  std::mt19937_64 rng(1);
  std::vector<int> ag(500), ac(500);
  for (std::size_t i = 0; i < ag.size(); ++i) {
    ag[i] = static_cast<int>(rng() % 10);
    ac[i] = (ag[i] * 3 + 1) % 10;
  }
  const auto m = association_labels(ag, ac, 10, 10);
  CHECK(m.total() == 500);
  for (std::size_t r = 0; r < 10; ++r) {
    std::size_t nonzero = 0;
    double mx = 0.0, sum = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
      nonzero += m.count(r, c) > 0 ? 1 : 0;
      mx = std::max(mx, m.normalized(r, c));
      sum += m.normalized(r, c);
    }
    CHECK(nonzero == 1);
    CHECK(mx == 1.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (double v : concentration(m)) CHECK(v == 0.0);
}

TEST_CASE("uniform acoustic assignments give flat rows") {
  std::mt19937_64 rng(77);
  std::vector<int> ag(10000), ac(10000);
  for (std::size_t i = 0; i < ag.size(); ++i) {
    ag[i] = static_cast<int>(rng() % 10);
    ac[i] = static_cast<int>(rng() % 10);
  }
  const auto m = association_labels(ag, ac, 10, 10);
  for (double v : m.row_normalized) {
    CHECK(v >= 0.07);
    CHECK(v <= 0.13);
  }
  for (std::size_t r = 0; r < 10; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 10; ++c) s += m.normalized(r, c);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("emotion filter and joins") {
  const auto ag = make_set({0, 1, 1, 2}, 3, "ag");
  auto ac = make_set({1, 0, 0, 1}, 2, "ac");
  std::map<std::string, Emotion> emo = {
      {"s0", Emotion::Anger}, {"s1", Emotion::Anger}, {"s2", Emotion::Sadness}, {"s3", Emotion::Anger}};

  const auto all = association(ag, ac, emo, std::nullopt);
  CHECK(all.total() == 4);
  CHECK(all.count(1, 0) == 2);

  const auto anger = association(ag, ac, emo, Emotion::Anger);
  CHECK(anger.total() == 3);
  CHECK(anger.count(1, 0) == 1);

  const auto none = association(ag, ac, emo, Emotion::Happiness);
  CHECK(none.total() == 0);
  CHECK(std::all_of(none.empty_row.begin(), none.empty_row.end(), [](bool b) { return b; }));
  for (double v : concentration(none)) CHECK(std::isnan(v));

  std::reverse(ac.items.begin(), ac.items.end());
  CHECK(association(ag, ac, emo, std::nullopt).count(1, 0) == 2);

  ac.items.pop_back();
  CHECK(code_of([&] { association(ag, ac, emo, std::nullopt); }) == ErrorCode::JoinError);
  ac.items.push_back({"other", 0, 0.0});
  CHECK(code_of([&] { association(ag, ac, emo, std::nullopt); }) == ErrorCode::JoinError);
}

TEST_CASE("concentration closed forms") {
  AssociationMatrix m;
  m.n_rows = 3;
  m.n_cols = 10;
  m.counts.assign(30, 0);
  m.row_normalized.assign(30, 0.0);
  m.empty_row = {false, false, false};
  m.row_normalized[0] = 1.0;
  for (std::size_t c = 0; c < 10; ++c) m.row_normalized[10 + c] = 0.1;
  m.row_normalized[20] = 0.5;
  m.row_normalized[21] = 0.5;
  const auto h = concentration(m);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h[2] == doctest::Approx(std::log(2.0) / std::log(10.0)).epsilon(1e-12));
  CHECK(h[2] == doctest::Approx(0.301).epsilon(1e-3));
}

TEST_CASE("overlap table shape") {
  std::vector<TaggedAssignment> items;
  // Vowel A, Happiness: the hand example.
  for (int i = 0; i < 60; ++i) items.push_back({0, 0, Vowel::A, Emotion::Happiness});
  for (int i = 0; i < 40; ++i) items.push_back({1, 0, Vowel::A, Emotion::Happiness});
  for (int i = 0; i < 50; ++i) items.push_back({0, 1, Vowel::A, Emotion::Happiness});
  for (int i = 0; i < 30; ++i) items.push_back({1, 1, Vowel::A, Emotion::Happiness});
  for (int i = 0; i < 20; ++i) items.push_back({2, 1, Vowel::A, Emotion::Happiness});
  // Vowel u, Anger: disjoint
  for (int i = 0; i < 5; ++i) items.push_back({0, 0, Vowel::U, Emotion::Anger});
  for (int i = 0; i < 5; ++i) items.push_back({2, 1, Vowel::U, Emotion::Anger});

  const auto t = overlap_table(items, 3, 25.0);
  REQUIRE(t.by_emotion[static_cast<int>(Emotion::Happiness)][0].has_value());
  CHECK(t.by_emotion[static_cast<int>(Emotion::Happiness)][0]->sim_percent == 40.0);
  CHECK(t.by_emotion[static_cast<int>(Emotion::Anger)][5]->warning);
  CHECK_FALSE(t.by_emotion[static_cast<int>(Emotion::Neutral)][0].has_value());
  CHECK(*t.emotion_average(Emotion::Happiness) == 40.0);
  CHECK_FALSE(t.emotion_average(Emotion::Neutral).has_value());

  const auto csv = overlap_table_csv(t);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 1 + 3 + 1 + 4);
  CHECK(rows[0] == "row,A,@,E,i,ae,u,mean");
  CHECK(rows[4].rfind("sim_all,", 0) == 0);
  bool found = false;
  for (const auto& r : rows) {
    if (r.rfind("sim_Happiness,", 0) == 0) {
      const auto cells = io::split(r, ',');
      CHECK(io::parse_double(cells[1], "csv") == 40.0);
      found = true;
    }
  }
  CHECK(found);
  for (auto e : kAllEmotions) CHECK(csv.find("sim_" + std::string(emotion_name(e))) != std::string::npos);
}

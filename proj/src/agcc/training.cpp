// SPDX-License-Identifier: Apache-2.0
#include "agcc/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "agcc/corpus_analysis.hpp"
#include "agcc/error.hpp"
#include "agcc/io.hpp"
#include "agcc/rng.hpp"

namespace agcc {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

double uar(std::span<const int> predictions, std::span<const int> labels, std::size_t n_classes) {
  if (predictions.size() != labels.size()) fail(ErrorCode::DimensionMismatch, "prediction and label counts differ");
  std::vector<std::size_t> support(n_classes, 0), hit(n_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) fail(ErrorCode::DataError, "label out of range");
    ++support[static_cast<std::size_t>(y)];
    if (predictions[i] == y) ++hit[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (support[c] == 0) fail(ErrorCode::MissingClass, "class " + std::to_string(c) + " has no samples");
    sum += static_cast<double>(hit[c]) / static_cast<double>(support[c]);
  }
  return sum / static_cast<double>(n_classes);
}

const char* anchor_mode_name(AnchorMode m) noexcept {
  switch (m) {
    case AnchorMode::None: return "none";
    case AnchorMode::Cluster: return "ag";
    case AnchorMode::Vowel: return "hard-ag";
  }
  return "?";
}

AnchorMode parse_anchor_mode(const std::string& s) {
  if (s == "none") return AnchorMode::None;
  if (s == "ag") return AnchorMode::Cluster;
  if (s == "hard-ag") return AnchorMode::Vowel;
  fail(ErrorCode::ConfigError, "unknown mode '" + s + "' (expected ag, hard-ag or none)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::ConfigError, "lr must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) fail(ErrorCode::ConfigError, "weight_decay must be >= 0");
  if (batch_size == 0 || max_epochs == 0 || patience == 0) {
    fail(ErrorCode::ConfigError, "batch_size, max_epochs and patience must be positive");
  }
  if (hidden.empty()) fail(ErrorCode::ConfigError, "at least one hidden layer is required");
  for (auto h : hidden) {
    if (h == 0) fail(ErrorCode::ConfigError, "hidden sizes must be positive");
  }
}

void TrainData::validate() const {
  auto check = [&](const LabeledSet& s, const char* name, bool allow_empty) {
    if (s.x.size() != s.rows() * dim) fail(ErrorCode::DataError, std::string(name) + ": feature matrix shape");
    if (!allow_empty && s.rows() == 0) fail(ErrorCode::DataError, std::string(name) + " is empty");
    for (double v : s.x) {
      if (!std::isfinite(v)) fail(ErrorCode::DataError, std::string(name) + ": non-finite feature");
    }
    for (int y : s.y) {
      if (y < 0 || static_cast<std::size_t>(y) >= kEmotionCount) {
        fail(ErrorCode::DataError, std::string(name) + ": label out of range");
      }
    }
  };
  if (dim == 0) fail(ErrorCode::DataError, "feature dimension is zero");
  check(source, "source", false);
  check(target_train, "target_train", true);
  check(target_val, "target_val", false);
  check(target_test, "target_test", false);
  if (!source_pool.empty() && source_pool.size() != source.rows()) {
    fail(ErrorCode::DataError, "source pool size differs from source rows");
  }
  if (!target_train_pool.empty() && target_train_pool.size() != target_train.rows()) {
    fail(ErrorCode::DataError, "target pool size differs from target_train rows");
  }
}

TrainData assemble_train_data(const std::vector<FeatureRow>& rows, AnchorMode mode, std::size_t n_clusters,
                              const SplitConfig& split, std::uint64_t seed) {
  if (split.val_fraction < 0.0 || split.test_fraction < 0.0 || split.val_fraction + split.test_fraction >= 1.0) {
    fail(ErrorCode::ConfigError, "split fractions must be >= 0 and sum below 1");
  }
  if (rows.empty()) fail(ErrorCode::DataError, "no feature rows");
  TrainData d;
  d.dim = rows.front().feature.size();
  d.n_keys = mode == AnchorMode::Vowel ? kVowelCount : n_clusters;
  auto key_of = [&](const FeatureRow& r) {
    if (mode == AnchorMode::Vowel) return static_cast<int>(r.vowel);
    if (mode == AnchorMode::Cluster && (r.cluster < 0 || static_cast<std::size_t>(r.cluster) >= n_clusters)) {
      fail(ErrorCode::UnknownCluster, "row " + r.id + " has no valid cluster id");
    }
    return r.cluster < 0 ? 0 : r.cluster;
  };
  auto append = [&](LabeledSet& s, const FeatureRow& r) {
    if (r.feature.size() != d.dim) fail(ErrorCode::DimensionMismatch, "row " + r.id + " has a different dimension");
    s.x.insert(s.x.end(), r.feature.begin(), r.feature.end());
    s.y.push_back(static_cast<int>(r.emotion));
  };
  std::vector<std::vector<std::size_t>> target_by_emotion(kEmotionCount);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].target) {
      target_by_emotion[static_cast<std::size_t>(rows[i].emotion)].push_back(i);
    } else {
      append(d.source, rows[i]);
      if (mode != AnchorMode::None || n_clusters > 0) {
        d.source_pool.push_back({rows[i].emotion, key_of(rows[i]), static_cast<int>(rows[i].vowel)});
      }
    }
  }
  auto rng = substream(seed, "split");
  std::vector<std::size_t> train_rows, val_rows, test_rows;
  for (auto& group : target_by_emotion) {
    std::shuffle(group.begin(), group.end(), rng);
    const auto n = group.size();
    const auto n_test = static_cast<std::size_t>(std::llround(split.test_fraction * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(split.val_fraction * static_cast<double>(n)));
    for (std::size_t j = 0; j < n; ++j) {
      (j < n_test ? test_rows : j < n_test + n_val ? val_rows : train_rows).push_back(group[j]);
    }
  }
  for (auto* v : {&train_rows, &val_rows, &test_rows}) std::sort(v->begin(), v->end());
  for (auto i : train_rows) {
    append(d.target_train, rows[i]);
    if (mode != AnchorMode::None || n_clusters > 0) {
      d.target_train_pool.push_back({rows[i].emotion, key_of(rows[i]), static_cast<int>(rows[i].vowel)});
    }
  }
  for (auto i : val_rows) append(d.target_val, rows[i]);
  for (auto i : test_rows) append(d.target_test, rows[i]);
  return d;
}

std::string epoch_record_json(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},       {"loss_er", r.loss_er},     {"loss_ag", r.loss_ag},
                      {"loss_total", r.loss_total}, {"uar_val", r.uar_val}, {"uar_test", r.uar_test},
                      {"triplets", r.triplets}, {"intra_cluster_distance", r.intra_cluster_distance}};
  return j.dump();
}

namespace {

std::vector<double> gather(const std::vector<double>& x, std::size_t dim, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(rows[i] * dim), dim,
                out.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return out;
}

double evaluate_uar(const Mlp& net, const LabeledSet& s) {
  const auto pred = net.predict(s.x, s.rows());
  return uar(pred, s.y);
}

double full_ce(const Mlp& net, const LabeledSet& s) {
  Mlp::Cache c;
  net.forward(s.x, s.rows(), c);
  std::vector<double> d;
  return softmax_cross_entropy(c.logits(), s.y, net.output_dim(), d);
}

// Rows of the stacked triplet batch: anchor (target_train), positive, negative (source).
struct TripletBatch {
  std::vector<double> x;
  std::vector<Triplet> local;
};

TripletBatch stack_triplets(const TrainData& data, std::span<const Triplet> ts) {
  TripletBatch b;
  b.x.resize(ts.size() * 3 * data.dim);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto put = [&](const std::vector<double>& src, std::size_t row, std::size_t slot) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(row * data.dim), data.dim,
                  b.x.begin() + static_cast<std::ptrdiff_t>(slot * data.dim));
    };
    put(data.target_train.x, ts[i].anchor, 3 * i);
    put(data.source.x, ts[i].positive, 3 * i + 1);
    put(data.source.x, ts[i].negative, 3 * i + 2);
    b.local.push_back({3 * i, 3 * i + 1, 3 * i + 2, ts[i].weight});
  }
  return b;
}

CommonKeys common_keys_of(const TrainData& data, double threshold) {
  if (data.n_keys == 0 || data.source_pool.empty() || data.target_train_pool.empty()) return {};
  return CommonKeys(data.source_pool, data.target_train_pool, data.n_keys, threshold);
}

void write_f64(const std::filesystem::path& p, const std::vector<double>& v) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) fail(ErrorCode::IoError, "write failed: " + p.string());
}

std::vector<double> read_f64(const std::filesystem::path& p, std::size_t n) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + p.string());
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
    fail(ErrorCode::MalformedInput, p.string() + ": expected " + std::to_string(n) + " doubles");
  }
  char extra;
  if (in.read(&extra, 1)) fail(ErrorCode::MalformedInput, p.string() + ": trailing bytes");
  return v;
}

nlohmann::json record_to_json(const EpochRecord& r) { return nlohmann::json::parse(epoch_record_json(r)); }

EpochRecord record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.loss_er = j.at("loss_er").get<double>();
  r.loss_ag = j.at("loss_ag").get<double>();
  r.loss_total = j.at("loss_total").get<double>();
  r.uar_val = j.at("uar_val").get<double>();
  r.uar_test = j.at("uar_test").get<double>();
  r.triplets = j.at("triplets").get<std::size_t>();
  r.intra_cluster_distance = j.at("intra_cluster_distance").get<double>();
  return r;
}

}  // namespace

double intra_cluster_distance(const Mlp& net, const TrainData& data, const CommonKeys& common) {
  if (common.empty()) return 0.0;
  Mlp::Cache cs, ct;
  net.forward(data.source.x, data.source.rows(), cs);
  net.forward(data.target_train.x, data.target_train.rows(), ct);
  const std::size_t e = net.embedding_dim();

  // Mean and total variance of one (emotion, key) group; returns the size.
  auto moments = [&](const Mlp::Cache& c, const std::vector<PoolItem>& pool, std::size_t emo, int key,
                     std::vector<double>& mu, double& var) {
    mu.assign(e, 0.0);
    var = 0.0;
    std::size_t n = 0;
    auto member = [&](std::size_t i) {
      return pool[i].key == key && static_cast<std::size_t>(pool[i].emotion) == emo;
    };
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!member(i)) continue;
      ++n;
      for (std::size_t j = 0; j < e; ++j) mu[j] += c.embedding()[i * e + j];
    }
    if (n == 0) return n;
    for (auto& m : mu) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!member(i)) continue;
      for (std::size_t j = 0; j < e; ++j) {
        const double d = c.embedding()[i * e + j] - mu[j];
        var += d * d;
      }
    }
    var /= static_cast<double>(n);
    return n;
  };

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t emo = 0; emo < kEmotionCount; ++emo) {
    for (int key : common.keys_for(static_cast<Emotion>(emo))) {
      // E|zs - zt|^2 over independent pairs = |mu_s - mu_t|^2 + var_s + var_t
      std::vector<double> ms, mt;
      double vs = 0.0, vt = 0.0;
      if (moments(cs, data.source_pool, emo, key, ms, vs) == 0 ||
          moments(ct, data.target_train_pool, emo, key, mt, vt) == 0) {
        continue;
      }
      double between = 0.0;
      for (std::size_t j = 0; j < e; ++j) between += (ms[j] - mt[j]) * (ms[j] - mt[j]);
      total += between + vs + vt;
      ++used;
    }
  }
  return used == 0 ? 0.0 : total / static_cast<double>(used);
}

TrainResult train(const TrainData& data, const CentroidGeometry* geometry, const AnchorLossConfig& cfg,
                  const TrainConfig& tcfg, AnchorMode mode, const TrainHooks& hooks,
                  std::optional<TrainState> resume) {
  cfg.validate();
  tcfg.validate();
  data.validate();
  const bool anchoring = mode != AnchorMode::None;
  if (anchoring) {
    if (data.source_pool.empty() || data.target_train_pool.empty() || data.n_keys == 0) {
      fail(ErrorCode::DataError, "anchoring needs source and target pools");
    }
    if (mode == AnchorMode::Cluster && geometry == nullptr) {
      fail(ErrorCode::ConfigError, "cluster anchoring needs the cluster model geometry");
    }
  }
  const auto common = common_keys_of(data, cfg.threshold_percent);
  const CentroidGeometry* geo = mode == AnchorMode::Cluster ? geometry : nullptr;

  std::vector<std::size_t> sizes = {data.dim};
  sizes.insert(sizes.end(), tcfg.hidden.begin(), tcfg.hidden.end());
  sizes.push_back(kEmotionCount);

  TrainState st;
  if (resume) {
    st = std::move(*resume);
    if (st.net.sizes() != sizes) fail(ErrorCode::ModelMismatch, "checkpoint architecture differs from configuration");
  } else {
    st.net = Mlp(sizes);
    auto rng = substream(tcfg.seed, "init");
    st.net.init(rng);
    EpochRecord r0;
    r0.epoch = 0;
    r0.loss_er = full_ce(st.net, data.source);
    if (anchoring) {
      const auto ts = sample_triplets(data.source_pool, data.target_train_pool, data.n_keys, geo, cfg,
                                      substream_seed(tcfg.seed, "triplets", 0));
      if (!ts.triplets.empty()) {
        auto b = stack_triplets(data, ts.triplets);
        Mlp::Cache c;
        st.net.forward(b.x, b.local.size() * 3, c);
        r0.loss_ag = ag_loss(c.embedding(), st.net.embedding_dim(), b.local, cfg).value /
                     static_cast<double>(b.local.size());
        r0.triplets = b.local.size();
      }
    }
    r0.loss_total = total_loss(r0.loss_er, r0.loss_ag, cfg.gamma_total);
    r0.uar_val = evaluate_uar(st.net, data.target_val);
    r0.uar_test = evaluate_uar(st.net, data.target_test);
    r0.intra_cluster_distance = intra_cluster_distance(st.net, data, common);
    st.history.push_back(r0);
  }
  st.opt.lr = tcfg.lr;
  st.opt.weight_decay = tcfg.weight_decay;

  const std::size_t ns = data.source.rows();
  const std::size_t nb = (ns + tcfg.batch_size - 1) / tcfg.batch_size;
  bool interrupted = false;
  std::vector<double> grad(st.net.params().size());
  Mlp::Cache cache, tcache;
  std::vector<double> d_logits;

  while (!st.stopped && st.epoch < tcfg.max_epochs) {
    const std::size_t epoch = st.epoch + 1;
    std::vector<std::size_t> perm(ns);
    std::iota(perm.begin(), perm.end(), 0);
    auto brng = substream(tcfg.seed, "batches", epoch);
    std::shuffle(perm.begin(), perm.end(), brng);

    std::vector<Triplet> triplets;
    if (anchoring) {
      triplets = sample_triplets(data.source_pool, data.target_train_pool, data.n_keys, geo, cfg,
                                 substream_seed(tcfg.seed, "triplets", epoch))
                     .triplets;
      auto trng = substream(tcfg.seed, "triplet_order", epoch);
      std::shuffle(triplets.begin(), triplets.end(), trng);
    }

    double ce_sum = 0.0, ag_sum = 0.0;
    std::size_t ag_count = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * tcfg.batch_size, hi = std::min(ns, lo + tcfg.batch_size);
      const std::span<const std::size_t> rows(perm.data() + lo, hi - lo);
      const auto xb = gather(data.source.x, data.dim, rows);
      std::vector<int> yb;
      for (auto r : rows) yb.push_back(data.source.y[r]);
      st.net.forward(xb, rows.size(), cache);
      const double ce = softmax_cross_entropy(cache.logits(), yb, kEmotionCount, d_logits);
      ce_sum += ce * static_cast<double>(rows.size());
      std::fill(grad.begin(), grad.end(), 0.0);
      st.net.backward(cache, d_logits, {}, grad);

      const std::size_t t_lo = b * triplets.size() / nb, t_hi = (b + 1) * triplets.size() / nb;
      if (t_hi > t_lo) {
        const std::span<const Triplet> chunk(triplets.data() + t_lo, t_hi - t_lo);
        auto tb = stack_triplets(data, chunk);
        st.net.forward(tb.x, tb.local.size() * 3, tcache);
        auto ag = ag_loss(tcache.embedding(), st.net.embedding_dim(), tb.local, cfg);
        ag_sum += ag.value;
        ag_count += chunk.size();
        const double scale = cfg.gamma_total / static_cast<double>(chunk.size());
        for (double& g : ag.grad) g *= scale;
        st.net.backward(tcache, {}, ag.grad, grad);
      }
      st.opt.step(st.net.params(), grad);
      if (hooks.on_step) hooks.on_step(st.net.params());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_er = ce_sum / static_cast<double>(ns);
    rec.loss_ag = ag_count ? ag_sum / static_cast<double>(ag_count) : 0.0;
    rec.loss_total = total_loss(rec.loss_er, rec.loss_ag, cfg.gamma_total);
    rec.triplets = ag_count;
    rec.uar_val = evaluate_uar(st.net, data.target_val);
    rec.uar_test = evaluate_uar(st.net, data.target_test);
    rec.intra_cluster_distance = intra_cluster_distance(st.net, data, common);
    st.history.push_back(rec);
    st.epoch = epoch;

    if (rec.uar_val > st.best_uar) {
      st.best_uar = rec.uar_val;
      st.best_epoch = epoch;
      st.best_params = st.net.params();
      st.since_best = 0;
    } else if (++st.since_best >= tcfg.patience) {
      st.stopped = true;
    }
    if (hooks.on_epoch && !hooks.on_epoch(st)) {
      interrupted = true;
      break;
    }
  }

  TrainResult res;
  res.net = st.net;
  if (!interrupted && !st.best_params.empty()) res.net.params() = st.best_params;
  res.history = st.history;
  res.best_epoch = st.best_epoch;
  res.early_stopped = st.stopped;
  res.target_val_uar = evaluate_uar(res.net, data.target_val);
  res.target_test_uar = evaluate_uar(res.net, data.target_test);
  return res;
}

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state, const TrainConfig& tcfg) {
  io::ensure_dir(dir);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : state.history) hist.push_back(record_to_json(r));
  nlohmann::json j = {{"format", "f64-le"},
                      {"sizes", state.net.sizes()},
                      {"n_params", state.net.params().size()},
                      {"epoch", state.epoch},
                      {"adam_t", state.opt.t},
                      {"best_uar", state.best_uar},
                      {"best_epoch", state.best_epoch},
                      {"since_best", state.since_best},
                      {"stopped", state.stopped},
                      {"has_best", !state.best_params.empty()},
                      {"seed", tcfg.seed},
                      {"history", hist}};
  write_f64(dir / "weights.bin", state.net.params());
  write_f64(dir / "adam_m.bin", state.opt.m.empty() ? std::vector<double>(state.net.params().size(), 0.0) : state.opt.m);
  write_f64(dir / "adam_v.bin", state.opt.v.empty() ? std::vector<double>(state.net.params().size(), 0.0) : state.opt.v);
  if (!state.best_params.empty()) write_f64(dir / "best.bin", state.best_params);
  io::write_text(dir / "checkpoint.json", j.dump(2) + "\n");
}

TrainState load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / "checkpoint.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, (dir / "checkpoint.json").string() + ": " + e.what());
  }
  TrainState st;
  try {
    st.net = Mlp(j.at("sizes").get<std::vector<std::size_t>>());
    const std::size_t n = j.at("n_params").get<std::size_t>();
    if (n != st.net.params().size()) fail(ErrorCode::MalformedInput, "parameter count mismatch in checkpoint");
    st.net.params() = read_f64(dir / "weights.bin", n);
    st.opt.t = j.at("adam_t").get<std::size_t>();
    if (st.opt.t > 0) {
      st.opt.m = read_f64(dir / "adam_m.bin", n);
      st.opt.v = read_f64(dir / "adam_v.bin", n);
    }
    st.epoch = j.at("epoch").get<std::size_t>();
    st.best_uar = j.at("best_uar").get<double>();
    st.best_epoch = j.at("best_epoch").get<std::size_t>();
    st.since_best = j.at("since_best").get<std::size_t>();
    st.stopped = j.at("stopped").get<bool>();
    if (j.at("has_best").get<bool>()) st.best_params = read_f64(dir / "best.bin", n);
    for (const auto& r : j.at("history")) st.history.push_back(record_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedInput, (dir / "checkpoint.json").string() + ": " + e.what());
  }
  return st;
}

void save_weights(const std::filesystem::path& dir, const Mlp& net) {
  io::ensure_dir(dir);
  write_f64(dir / "model.bin", net.params());
  nlohmann::json j = {{"format", "f64-le"},
                      {"activation", "relu"},
                      {"sizes", net.sizes()},
                      {"n_params", net.params().size()},
                      {"layout", "per layer: W[out][in] then b[out]"}};
  io::write_text(dir / "model.json", j.dump(2) + "\n");
}

Mlp load_weights(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / "model.json"));
    Mlp net(j.at("sizes").get<std::vector<std::size_t>>());
    net.params() = read_f64(dir / "model.bin", net.params().size());
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedInput, (dir / "model.json").string() + ": " + e.what());
  }
}

}  // namespace agcc

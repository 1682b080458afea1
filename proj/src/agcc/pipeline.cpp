// SPDX-License-Identifier: Apache-2.0
#include "agcc/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <sstream>

#include <json.hpp>

#include "agcc/corpus_analysis.hpp"
#include "agcc/error.hpp"
#include "agcc/geometry.hpp"
#include "agcc/io.hpp"
#include "agcc/rng.hpp"

namespace agcc {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<const char*, 8> kCommandNames = {"normalize", "segment", "cluster", "overlap",
                                                      "associate", "train", "evaluate", "synth"};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const fs::path& require(const fs::path& p, Command cmd, const char* key) {
  if (p.empty()) fail(ErrorCode::ConfigError, std::string(command_name(cmd)) + " needs paths." + key);
  return p;
}

std::string join_csv(const std::vector<std::string>& f) {
  std::string s;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) s += ',';
    s += f[i];
  }
  return s;
}

Json parse_json_text(const std::string& text) { return Json::parse(text); }

double json_number(double v) { return std::isfinite(v) ? v : 0.0; }

struct Context {
  Command cmd;
  const PipelineConfig& cfg;
  fs::path dir;
  Json summary = Json::object();
  std::vector<std::string> warnings;
};

// --- synth -----------------------------------------------------------------

std::string alignment_tsv(const std::vector<PhonemeInterval>& rows) {
  std::string s = "label\tstart_sec\tend_sec\n";
  for (const auto& r : rows) {
    s += r.label + "\t" + io::format_double(r.start_sec) + "\t" + io::format_double(r.end_sec) + "\n";
  }
  return s;
}

void cmd_synth(Context& cx) {
  const auto& spec = cx.cfg.synth.spec;
  const auto ds = synth::generate(spec);

  std::vector<GestureSegment> segs;
  std::vector<Series> acoustic;
  FeatureMatrix fm;
  fm.d = spec.feature_dim;
  std::vector<LabelRow> labels;
  std::map<std::string, std::size_t> per_corpus;
  for (const auto& s : ds.samples) {
    segs.push_back(s.segment);
    acoustic.push_back(s.acoustic);
    fm.ids.push_back(s.segment.segment_id);
    fm.values.insert(fm.values.end(), s.feature.begin(), s.feature.end());
    labels.push_back({s.segment.segment_id, s.segment.emotion, s.segment.corpus_id});
    ++per_corpus[s.segment.corpus_id];
  }
  fm.n = fm.ids.size();
  write_segment_manifest(cx.dir / "segments", segs, &acoustic);
  write_features(cx.dir / "features.f32", fm);
  io::write_text(cx.dir / "labels.csv", labels_to_csv(labels));

  std::size_t utterances = 0;
  if (cx.cfg.synth.landmark_utterances > 0) {
    const auto utts = synth::generate_landmark_utterances(spec, cx.cfg.synth.landmark_utterances);
    std::string index = "utterance_id,speaker_id,emotion,corpus\n";
    for (const auto& u : utts) {
      std::ostringstream os;
      write_landmark_csv(os, u.landmarks);
      io::write_text(cx.dir / "landmarks" / (u.landmarks.utterance_id + ".csv"), os.str());
      io::write_text(cx.dir / "alignments" / (u.landmarks.utterance_id + ".tsv"), alignment_tsv(u.alignment));
      index += u.landmarks.utterance_id + "," + u.landmarks.speaker_id + "," +
               std::string(emotion_name(u.emotion)) + "," + u.corpus + "\n";
    }
    io::write_text(cx.dir / "utterances.csv", index);
    utterances = utts.size();
  }

  Json counts = Json::object();
  for (const auto& [k, v] : per_corpus) counts[k] = v;
  cx.summary = {{"segments", segs.size()},
                {"per_corpus", counts},
                {"families", spec.n_families},
                {"feature_dim", spec.feature_dim},
                {"acoustic_dim", spec.acoustic_dim},
                {"landmark_utterances", utterances}};
}

// --- normalize / segment ---------------------------------------------------

std::vector<fs::path> landmark_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "landmark directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void cmd_normalize(Context& cx) {
  const auto files = landmark_files(require(cx.cfg.paths.landmarks, cx.cmd, "landmarks"));
  if (files.empty()) fail(ErrorCode::DataError, "no landmark CSVs in " + cx.cfg.paths.landmarks.string());
  Json entries = Json::array();
  std::size_t frames = 0;
  for (const auto& f : files) {
    auto seq = read_landmark_csv_file(f.string());
    seq.utterance_id = f.stem().string();
    const auto norm = normalize_sequence(seq);
    std::ostringstream os;
    write_landmark_csv(os, norm);
    const std::string rel = "normalized/" + f.filename().string();
    io::write_text(cx.dir / rel, os.str());
    entries.push_back({{"utterance_id", seq.utterance_id},
                       {"input", f.filename().string()},
                       {"output", rel},
                       {"frames", norm.frames.size()},
                       {"fps", norm.frame_rate_hz}});
    frames += norm.frames.size();
  }
  io::write_text(cx.dir / "manifest.json", Json{{"utterances", entries}}.dump(2) + "\n");
  cx.summary = {{"utterances", files.size()}, {"frames", frames}};
}

struct UtteranceMeta {
  std::string utterance_id;
  SegmentMeta meta;
};

std::vector<UtteranceMeta> read_utterances(const fs::path& path) {
  const auto t = io::parse_csv_table(io::read_text(path), path.string());
  const std::vector<std::string> want = {"utterance_id", "speaker_id", "emotion", "corpus"};
  if (t.header != want) fail(ErrorCode::ParseError, path.string() + ":1: header must be " + join_csv(want));
  std::vector<UtteranceMeta> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    UtteranceMeta u;
    u.utterance_id = r[0];
    u.meta.utterance_id = r[0];
    u.meta.speaker_id = r[1];
    try {
      u.meta.emotion = parse_emotion(r[2]);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 2) + ": " + e.what());
    }
    u.meta.corpus_id = r[3];
    out.push_back(std::move(u));
  }
  return out;
}

void cmd_segment(Context& cx) {
  const auto& p = cx.cfg.paths;
  const auto utts = read_utterances(require(p.utterances, cx.cmd, "utterances"));
  require(p.landmarks, cx.cmd, "landmarks");
  require(p.alignments, cx.cmd, "alignments");
  std::vector<GestureSegment> segs;
  std::size_t dropped = 0, non_target = 0;
  std::array<std::size_t, kVowelCount> per_vowel{};
  for (const auto& u : utts) {
    const fs::path lm = p.landmarks / (u.utterance_id + ".csv");
    const fs::path al = p.alignments / (u.utterance_id + ".tsv");
    if (!fs::exists(lm)) fail(ErrorCode::IoError, "missing landmark file: " + lm.string());
    if (!fs::exists(al)) fail(ErrorCode::IoError, "missing alignment file: " + al.string());
    auto seq = read_landmark_csv_file(lm.string());
    seq.utterance_id = u.utterance_id;
    seq.speaker_id = u.meta.speaker_id;
    const auto mouth = extract_mouth(normalize_sequence(seq));
    auto cut = cut_segments(mouth, parse_alignment_file(al), u.meta, cx.cfg.vowels, cx.cfg.strict_vowels);
    dropped += cut.dropped_short;
    non_target += cut.non_target;
    for (auto& s : cut.segments) {
      ++per_vowel[static_cast<std::size_t>(s.vowel)];
      segs.push_back(std::move(s));
    }
  }
  if (segs.empty()) cx.warnings.push_back("no target-vowel segments were cut");
  write_segment_manifest(cx.dir / "segments", segs);
  Json pv = Json::object();
  for (auto v : kAllVowels) pv[std::string(vowel_symbol(v))] = per_vowel[static_cast<std::size_t>(v)];
  cx.summary = {{"utterances", utts.size()},
                {"segments", segs.size()},
                {"dropped_short", dropped},
                {"non_target", non_target},
                {"per_vowel", pv}};
}

// --- cluster ---------------------------------------------------------------

struct LoadedSegments {
  std::vector<ManifestEntry> entries;
  std::vector<Series> series;  // gesture or acoustic, per modality
};

LoadedSegments load_segments(const fs::path& manifest, Modality modality) {
  LoadedSegments ls;
  ls.entries = read_segment_manifest(manifest, modality == Modality::Gesture);
  for (const auto& e : ls.entries) {
    if (modality == Modality::Gesture) {
      ls.series.push_back(e.segment.series);
    } else {
      if (e.acoustic_path.empty()) {
        fail(ErrorCode::DataError, "segment " + e.segment.segment_id + " has no acoustic series");
      }
      ls.series.push_back(load_acoustic(manifest, e));
    }
  }
  return ls;
}

void cmd_cluster(Context& cx) {
  const auto& cc = cx.cfg.cluster;
  const auto ls = load_segments(require(cx.cfg.paths.segments, cx.cmd, "segments"), cc.fit.modality);
  std::vector<const Series*> ptrs;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < ls.series.size(); ++i) {
    ptrs.push_back(&ls.series[i]);
    ids.push_back(ls.entries[i].segment.segment_id);
  }
  const std::uint64_t seed = substream_seed(cx.cfg.seed, "clustering");

  std::size_t k = cc.k;
  if (cc.elbow) {
    const auto el = elbow_select(ptrs, cc.elbow->first, cc.elbow->second, cc.params, seed, cc.fit);
    io::CsvTable curve{{"k", "inertia"}, {}};
    for (const auto& [kk, inertia] : el.curve) curve.rows.push_back({std::to_string(kk), io::format_double(inertia)});
    io::write_text(cx.dir / "elbow.csv", io::csv_table_to_text(curve));
    k = el.k_star;
    cx.summary["elbow"] = {{"k_min", cc.elbow->first}, {"k_max", cc.elbow->second}, {"k_star", el.k_star}};
  }

  const auto fr = fit(ptrs, k, cc.params, seed, cc.fit);
  save_model(fr.model, cx.dir / "model");
  const auto set = predict(fr.model, ptrs, ids);
  write_assignments(cx.dir / "assignments.csv", set);

  std::vector<int> labels;
  for (const auto& a : set.items) labels.push_back(a.cluster_id);
  std::vector<std::size_t> columns(fr.model.dims());
  for (std::size_t c = 0; c < columns.size(); ++c) columns[c] = c;
  io::CsvTable prof{{"cluster_id", "column", "frame", "mean", "std"}, {}};
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& pr : cluster_profile(fr.model, labels, ptrs, columns)) {
    sizes[static_cast<std::size_t>(pr.cluster_id)] = pr.members;
    if (!pr.coords) continue;
    for (const auto& cp : *pr.coords) {
      for (std::size_t t = 0; t < cp.mean.size(); ++t) {
        prof.rows.push_back({std::to_string(pr.cluster_id), std::to_string(cp.column), std::to_string(t),
                             io::format_double(cp.mean[t]), io::format_double(cp.stddev[t])});
      }
    }
  }
  io::write_text(cx.dir / "profiles.csv", io::csv_table_to_text(prof));

  cx.summary["model_id"] = fr.model.model_id();
  cx.summary["modality"] = modality_name(cc.fit.modality);
  cx.summary["k"] = k;
  cx.summary["segments"] = ptrs.size();
  cx.summary["iterations"] = fr.iterations;
  cx.summary["reseeded"] = fr.reseeded;
  cx.summary["inertia"] = fr.model.inertia_history.empty() ? 0.0 : fr.model.inertia_history.back();
  cx.summary["cluster_sizes"] = sizes;
  const bool planted = std::all_of(ls.entries.begin(), ls.entries.end(),
                                   [](const ManifestEntry& e) { return e.segment.family >= 0; });
  if (planted) {
    std::vector<int> truth;
    for (const auto& e : ls.entries) truth.push_back(e.segment.family);
    cx.summary["purity"] = cluster_purity(fr.labels, truth);
  }
  if (fr.reseeded > 0) cx.warnings.push_back("empty clusters were reseeded " + std::to_string(fr.reseeded) + " times");
}

// --- overlap / associate ---------------------------------------------------

std::map<std::string, const GestureSegment*> index_segments(const std::vector<ManifestEntry>& entries) {
  std::map<std::string, const GestureSegment*> m;
  for (const auto& e : entries) {
    if (!m.emplace(e.segment.segment_id, &e.segment).second) {
      fail(ErrorCode::JoinError, "duplicate segment id in manifest: " + e.segment.segment_id);
    }
  }
  return m;
}

void cmd_overlap(Context& cx) {
  const auto entries = read_segment_manifest(require(cx.cfg.paths.segments, cx.cmd, "segments"), false);
  const auto set = read_assignments_csv(require(cx.cfg.paths.assignments, cx.cmd, "assignments"));
  const auto seg = index_segments(entries);
  std::vector<TaggedAssignment> tagged;
  std::vector<int> c1, c2;
  std::size_t other = 0;
  for (const auto& a : set.items) {
    auto it = seg.find(a.segment_ref);
    if (it == seg.end()) fail(ErrorCode::JoinError, "assignment for unknown segment: " + a.segment_ref);
    const auto& s = *it->second;
    int corpus;
    if (s.corpus_id == cx.cfg.source_corpus) {
      corpus = 0;
      c1.push_back(a.cluster_id);
    } else if (s.corpus_id == cx.cfg.target_corpus) {
      corpus = 1;
      c2.push_back(a.cluster_id);
    } else {
      ++other;
      continue;
    }
    tagged.push_back({a.cluster_id, corpus, s.vowel, s.emotion});
  }
  if (other) cx.warnings.push_back(std::to_string(other) + " segments belong to neither configured corpus");
  const double thr = cx.cfg.overlap_threshold;
  const auto report = overlap_labels(c1, c2, set.k, thr);
  const auto table = overlap_table(tagged, set.k, thr);
  io::write_text(cx.dir / "overlap.json", overlap_report_json(report) + "\n");
  io::write_text(cx.dir / "table.csv", overlap_table_csv(table));
  io::write_text(cx.dir / "table.json", overlap_table_json(table) + "\n");

  if (report.warning) cx.warnings.push_back("no cluster is common to both corpora at the threshold");
  Json avg = Json::object();
  for (auto e : kAllEmotions) {
    const auto v = table.emotion_average(e);
    avg[std::string(emotion_name(e))] = v ? Json(*v) : Json(nullptr);
  }
  cx.summary = {{"model_id", set.model_id},
                {"k", set.k},
                {"threshold_percent", thr},
                {"sim_percent", report.sim_percent},
                {"common_clusters", report.common_clusters()},
                {"warning", report.warning},
                {"emotion_average", avg}};
}

void cmd_associate(Context& cx) {
  const auto entries = read_segment_manifest(require(cx.cfg.paths.segments, cx.cmd, "segments"), false);
  const auto ag = read_assignments_csv(require(cx.cfg.paths.assignments, cx.cmd, "assignments"));
  const auto ac = read_assignments_csv(require(cx.cfg.paths.acoustic_assignments, cx.cmd, "acoustic_assignments"));
  std::map<std::string, Emotion> emotions;
  for (const auto& e : entries) emotions[e.segment.segment_id] = e.segment.emotion;

  Json report = Json::object();
  auto emit = [&](const std::string& name, std::optional<Emotion> filter) {
    const auto m = association(ag, ac, emotions, filter);
    io::write_text(cx.dir / ("heatmap_" + name + ".csv"), association_csv(m, true));
    io::write_text(cx.dir / ("counts_" + name + ".csv"), association_csv(m, false));
    Json j = parse_json_text(association_json(m));
    Json conc = Json::array();
    double sum = 0.0;
    std::size_t used = 0;
    for (double c : concentration(m)) {
      if (std::isnan(c)) {
        conc.push_back(nullptr);
      } else {
        conc.push_back(c);
        sum += c;
        ++used;
      }
    }
    j["concentration"] = conc;
    j["mean_concentration"] = used ? Json(sum / static_cast<double>(used)) : Json(nullptr);
    report[name] = j;
    return used ? sum / static_cast<double>(used) : 0.0;
  };
  Json means = Json::object();
  means["all"] = emit("all", std::nullopt);
  for (auto e : kAllEmotions) means[std::string(emotion_name(e))] = emit(std::string(emotion_name(e)), e);
  io::write_text(cx.dir / "association.json", report.dump(2) + "\n");
  cx.summary = {{"k_ag", ag.k}, {"k_acoustic", ac.k}, {"samples", ag.items.size()}, {"mean_concentration", means}};
}

// --- train / evaluate ------------------------------------------------------

std::map<std::string, LabelRow> label_index(const fs::path& path) {
  std::map<std::string, LabelRow> m;
  for (auto& r : read_labels_csv(path)) {
    const std::string id = r.sample_id;
    if (!m.emplace(id, std::move(r)).second) fail(ErrorCode::JoinError, "duplicate label for sample " + id);
  }
  return m;
}

void cmd_train(Context& cx) {
  const auto& cfg = cx.cfg;
  const auto& p = cfg.paths;
  const auto fm = read_features(require(p.features, cx.cmd, "features"));
  const auto labels = label_index(require(p.labels, cx.cmd, "labels"));
  const auto entries = read_segment_manifest(require(p.segments, cx.cmd, "segments"), false);
  const auto seg = index_segments(entries);

  std::optional<ClusterModel> model;
  std::map<std::string, int> cluster_of;
  if (cfg.mode == AnchorMode::Cluster) {
    model = load_model(require(p.model, cx.cmd, "model"));
    const auto set = read_assignments_csv(require(p.assignments, cx.cmd, "assignments"));
    if (set.model_id != model->model_id()) {
      fail(ErrorCode::ModelMismatch, "assignments were produced by a different cluster model");
    }
    for (const auto& a : set.items) cluster_of[a.segment_ref] = a.cluster_id;
  }

  std::vector<FeatureRow> rows;
  std::size_t other = 0;
  for (std::size_t i = 0; i < fm.n; ++i) {
    const auto& id = fm.ids[i];
    auto lab = labels.find(id);
    if (lab == labels.end()) fail(ErrorCode::JoinError, "no label for sample " + id);
    if (lab->second.corpus != cfg.source_corpus && lab->second.corpus != cfg.target_corpus) {
      ++other;
      continue;
    }
    auto s = seg.find(id);
    if (s == seg.end()) fail(ErrorCode::JoinError, "no segment for sample " + id);
    FeatureRow r;
    r.id = id;
    r.feature.assign(fm.values.begin() + static_cast<std::ptrdiff_t>(i * fm.d),
                     fm.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * fm.d));
    r.emotion = lab->second.emotion;
    r.target = lab->second.corpus == cfg.target_corpus;
    r.vowel = s->second->vowel;
    if (model) {
      auto c = cluster_of.find(id);
      if (c == cluster_of.end()) fail(ErrorCode::JoinError, "no cluster assignment for sample " + id);
      r.cluster = c->second;
    }
    rows.push_back(std::move(r));
  }
  if (other) cx.warnings.push_back(std::to_string(other) + " samples belong to neither configured corpus");

  const std::size_t n_clusters = model ? model->k() : 0;
  const auto data = assemble_train_data(rows, cfg.mode, n_clusters, cfg.split, cfg.seed);
  std::optional<CentroidGeometry> geometry;
  if (model) geometry.emplace(*model);

  std::optional<TrainState> resume;
  if (!p.resume.empty()) resume = load_checkpoint(p.resume);
  const std::size_t start_epoch = resume ? resume->epoch : 0;

  const fs::path ckpt = cx.dir / "checkpoint";
  bool interrupted = false;
  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainState& st) {
    const bool stop_here = cfg.stop_after > 0 && st.epoch >= start_epoch + cfg.stop_after;
    if (stop_here || st.stopped || st.epoch >= cfg.train.max_epochs) save_checkpoint(ckpt, st, cfg.train);
    if (stop_here && !st.stopped && st.epoch < cfg.train.max_epochs) {
      interrupted = true;
      return false;
    }
    return true;
  };
  const auto res = train(data, geometry ? &*geometry : nullptr, cfg.anchor, cfg.train, cfg.mode, hooks,
                         std::move(resume));

  std::string hist;
  for (const auto& r : res.history) hist += epoch_record_json(r) + "\n";
  io::write_text(cx.dir / "history.jsonl", hist);
  save_weights(cx.dir / "model", res.net);

  const auto& last = res.history.back();
  Json report = {{"mode", anchor_mode_name(cfg.mode)},
                 {"gamma_total", cfg.anchor.gamma_total},
                 {"epochs", last.epoch},
                 {"interrupted", interrupted},
                 {"early_stopped", res.early_stopped},
                 {"best_epoch", res.best_epoch},
                 {"target_val_uar", res.target_val_uar},
                 {"target_test_uar", res.target_test_uar},
                 {"source_rows", data.source.rows()},
                 {"target_anchor_rows", data.target_train.rows()},
                 {"target_val_rows", data.target_val.rows()},
                 {"target_test_rows", data.target_test.rows()},
                 {"intra_cluster_distance_initial", json_number(res.history.front().intra_cluster_distance)},
                 {"intra_cluster_distance_final", json_number(last.intra_cluster_distance)}};
  io::write_text(cx.dir / "report.json", report.dump(2) + "\n");
  cx.summary = report;
  if (interrupted) cx.warnings.push_back("training interrupted after epoch " + std::to_string(last.epoch));
}

void cmd_evaluate(Context& cx) {
  const auto& p = cx.cfg.paths;
  const auto net = load_weights(require(p.weights, cx.cmd, "weights"));
  const auto fm = read_features(require(p.features, cx.cmd, "features"));
  const auto labels = label_index(require(p.labels, cx.cmd, "labels"));
  if (net.input_dim() != fm.d) fail(ErrorCode::DimensionMismatch, "classifier input size differs from feature dimension");

  std::vector<double> x;
  std::vector<int> y;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < fm.n; ++i) {
    auto lab = labels.find(fm.ids[i]);
    if (lab == labels.end()) fail(ErrorCode::JoinError, "no label for sample " + fm.ids[i]);
    if (lab->second.corpus != cx.cfg.evaluate_corpus) continue;
    x.insert(x.end(), fm.values.begin() + static_cast<std::ptrdiff_t>(i * fm.d),
             fm.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * fm.d));
    y.push_back(static_cast<int>(lab->second.emotion));
    ids.push_back(fm.ids[i]);
  }
  if (y.empty()) fail(ErrorCode::EmptySet, "no samples of corpus " + cx.cfg.evaluate_corpus);
  const auto pred = net.predict(x, y.size());
  const double u = uar(pred, y);

  std::vector<std::vector<std::size_t>> confusion(kEmotionCount, std::vector<std::size_t>(kEmotionCount, 0));
  io::CsvTable out{{"sample_id", "emotion", "predicted"}, {}};
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++confusion[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(pred[i])];
    out.rows.push_back({ids[i], std::string(emotion_name(static_cast<Emotion>(y[i]))),
                        std::string(emotion_name(static_cast<Emotion>(pred[i])))});
  }
  io::write_text(cx.dir / "predictions.csv", io::csv_table_to_text(out));
  Json recall = Json::object();
  for (auto e : kAllEmotions) {
    const auto& row = confusion[static_cast<std::size_t>(e)];
    std::size_t total = 0;
    for (auto c : row) total += c;
    recall[std::string(emotion_name(e))] =
        static_cast<double>(row[static_cast<std::size_t>(e)]) / static_cast<double>(total);
  }
  Json report = {{"corpus", cx.cfg.evaluate_corpus},
                 {"samples", y.size()},
                 {"uar", u},
                 {"recall", recall},
                 {"confusion", confusion}};
  io::write_text(cx.dir / "evaluation.json", report.dump(2) + "\n");
  cx.summary = report;
}

// --- content hash ----------------------------------------------------------

void strip_key(Json& j, const std::string& key) {
  if (j.is_object()) {
    j.erase(key);
    for (auto& [k, v] : j.items()) strip_key(v, key);
  } else if (j.is_array()) {
    for (auto& v : j) strip_key(v, key);
  }
}

struct BestRecord {
  std::size_t epoch = 0;
  double uar_val = -1.0;
  double uar_test = 0.0;
  std::size_t epochs = 0;
};

BestRecord best_of(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  BestRecord b;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    try {
      const auto j = Json::parse(line);
      const auto epoch = j.at("epoch").get<std::size_t>();
      const double val = j.at("uar_val").get<double>();
      b.epochs = std::max(b.epochs, epoch);
      // the untrained network is never selected, matching train()
      if (epoch >= 1 && val > b.uar_val) {
        b.epoch = epoch;
        b.uar_val = val;
        b.uar_test = j.at("uar_test").get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (b.uar_val < 0.0) fail(ErrorCode::DataError, path.string() + ": history has no trained epoch");
  return b;
}

}  // namespace

const char* command_name(Command c) noexcept { return kCommandNames[static_cast<std::size_t>(c)]; }

std::optional<Command> parse_command(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCommandNames.size(); ++i) {
    if (name == kCommandNames[i]) return static_cast<Command>(i);
  }
  return std::nullopt;
}

fs::path run_directory(const PipelineConfig& cfg, Command cmd) {
  return cfg.out / (std::string(command_name(cmd)) + "-" + cfg.hash());
}

RunResult run_command(Command cmd, const PipelineConfig& cfg) {
  Context cx{cmd, cfg, run_directory(cfg, cmd), Json::object(), {}};
  // reported to the caller but kept out of run.json so reruns stay identical
  std::optional<std::string> replaced;
  if (fs::exists(cx.dir)) {
    replaced = "replaced existing run directory " + cx.dir.string();
    fs::remove_all(cx.dir);
  }
  io::ensure_dir(cx.dir);
  switch (cmd) {
    case Command::Synth: cmd_synth(cx); break;
    case Command::Normalize: cmd_normalize(cx); break;
    case Command::Segment: cmd_segment(cx); break;
    case Command::Cluster: cmd_cluster(cx); break;
    case Command::Overlap: cmd_overlap(cx); break;
    case Command::Associate: cmd_associate(cx); break;
    case Command::Train: cmd_train(cx); break;
    case Command::Evaluate: cmd_evaluate(cx); break;
  }
  Json run = {{"command", command_name(cmd)},
              {"config_hash", cfg.hash()},
              {"created_utc", utc_now()},
              {"config", Json::parse(cfg.canonical_json())},
              {"summary", cx.summary},
              {"warnings", cx.warnings}};
  io::write_text(cx.dir / "run.json", run.dump(2) + "\n");
  if (replaced) cx.warnings.insert(cx.warnings.begin(), *replaced);
  return {cx.dir, cx.summary.dump(), cx.warnings};
}

fs::path feature_sidecar(const fs::path& f32_path) {
  fs::path p = f32_path;
  return p.replace_extension(".json");
}

void write_features(const fs::path& f32_path, const FeatureMatrix& m) {
  if (m.values.size() != m.n * m.d || m.ids.size() != m.n) {
    fail(ErrorCode::DimensionMismatch, "feature matrix shape does not match n x d and ids");
  }
  io::write_f32_le(f32_path, m.values);
  Json j = {{"n", m.n}, {"d", m.d}, {"dtype", "f32-le"}, {"ids", m.ids}};
  io::write_text(feature_sidecar(f32_path), j.dump() + "\n");
}

FeatureMatrix read_features(const fs::path& f32_path) {
  const auto side = feature_sidecar(f32_path);
  if (!fs::exists(side)) fail(ErrorCode::IoError, "missing feature sidecar: " + side.string());
  FeatureMatrix m;
  try {
    const auto j = Json::parse(io::read_text(side));
    m.n = j.at("n").get<std::size_t>();
    m.d = j.at("d").get<std::size_t>();
    m.ids = j.at("ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, side.string() + ": " + e.what());
  }
  if (m.ids.size() != m.n || m.d == 0) fail(ErrorCode::MalformedInput, side.string() + ": ids must list n samples and d > 0");
  const auto bytes = fs::file_size(f32_path);
  if (bytes != m.n * m.d * sizeof(float)) {
    fail(ErrorCode::MalformedInput, f32_path.string() + ": size " + std::to_string(bytes) + " bytes, expected " +
                                        std::to_string(m.n * m.d * sizeof(float)));
  }
  m.values = io::read_f32_le(f32_path, m.n * m.d);
  for (float v : m.values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, f32_path.string() + ": non-finite feature value");
  }
  return m;
}

std::string labels_to_csv(const std::vector<LabelRow>& rows) {
  io::CsvTable t{{"sample_id", "emotion", "corpus"}, {}};
  for (const auto& r : rows) t.rows.push_back({r.sample_id, std::string(emotion_name(r.emotion)), r.corpus});
  return io::csv_table_to_text(t);
}

std::vector<LabelRow> read_labels_csv(const fs::path& path) {
  const auto t = io::parse_csv_table(io::read_text(path), path.string());
  const std::vector<std::string> want = {"sample_id", "emotion", "corpus"};
  if (t.header != want) fail(ErrorCode::ParseError, path.string() + ":1: header must be " + join_csv(want));
  std::vector<LabelRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    LabelRow l;
    l.sample_id = r[0];
    try {
      l.emotion = parse_emotion(r[1]);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(i + 2) + ": " + e.what());
    }
    l.corpus = r[2];
    out.push_back(std::move(l));
  }
  return out;
}

std::string compare_histories(const fs::path& a, const fs::path& b) {
  const auto ra = best_of(a), rb = best_of(b);
  auto side = [](const fs::path& p, const BestRecord& r) {
    return Json{{"history", p.string()},
                {"epochs", r.epochs},
                {"best_epoch", r.epoch},
                {"uar_val", r.uar_val},
                {"uar_test", r.uar_test}};
  };
  Json j = {{"a", side(a, ra)}, {"b", side(b, rb)}, {"uar_test_delta", rb.uar_test - ra.uar_test}};
  return j.dump(2);
}

std::string content_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = io::fnv1a64("");
  for (const auto& rel : files) {
    std::string body = io::read_text(dir / rel);
    if (rel.extension() == ".json") {
      try {
        Json j = Json::parse(body);
        strip_key(j, "created_utc");
        body = j.dump();
      } catch (const nlohmann::json::exception&) {
        // hashed verbatim
      }
    }
    h = io::fnv1a64(rel.generic_string(), h);
    h = io::fnv1a64(body, h);
  }
  return io::hex64(h);
}

}  // namespace agcc

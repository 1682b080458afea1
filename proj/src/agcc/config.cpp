// SPDX-License-Identifier: Apache-2.0
#include "agcc/config.hpp"

#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "agcc/error.hpp"
#include "agcc/io.hpp"

namespace agcc {

namespace {

using Json = nlohmann::ordered_json;

std::string describe(const toml::node& n) {
  std::ostringstream os;
  os << n.source().begin;
  return os.str();
}

// Dotted leaf keys of the table. Arrays and the alias table are leaves.
void flatten(const toml::table& t, const std::string& prefix, std::map<std::string, const toml::node*>& out) {
  for (const auto& [k, v] : t) {
    const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (const auto* sub = v.as_table(); sub && key != "vowels.aliases") {
      flatten(*sub, key, out);
    } else {
      out[key] = &v;
    }
  }
}

class Reader {
 public:
  explicit Reader(const toml::table& t) { flatten(t, "", leaves_); }

  const toml::node* find(const std::string& key) {
    auto it = leaves_.find(key);
    if (it == leaves_.end()) return nullptr;
    used_.insert(key);
    return it->second;
  }

  void get(const std::string& key, double& out) {
    if (const auto* n = find(key)) {
      if (auto v = n->value<double>()) {
        out = *v;
      } else {
        bad(key, *n, "a number");
      }
    }
  }

  template <class U>
    requires std::is_unsigned_v<U>
  void get(const std::string& key, U& out) {
    if (const auto* n = find(key)) {
      auto v = n->value<std::int64_t>();
      if (!v || *v < 0) bad(key, *n, "a non-negative integer");
      out = static_cast<U>(*v);
    }
  }

  void get(const std::string& key, bool& out) {
    if (const auto* n = find(key)) {
      auto v = n->value<bool>();
      if (!v) bad(key, *n, "a boolean");
      out = *v;
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const auto* n = find(key)) {
      auto v = n->value<std::string>();
      if (!v) bad(key, *n, "a string");
      out = *v;
    }
  }

  void get(const std::string& key, fs::path& out) {
    std::string s;
    if (leaves_.count(key)) {
      get(key, s);
      out = s.empty() ? fs::path() : fs::path(s);
    }
  }

  void get(const std::string& key, std::vector<std::size_t>& out) {
    if (const auto* n = find(key)) {
      const auto* arr = n->as_array();
      if (!arr) bad(key, *n, "an array of integers");
      out.clear();
      for (const auto& e : *arr) {
        auto v = e.value<std::int64_t>();
        if (!v || *v < 0) bad(key, e, "an array of non-negative integers");
        out.push_back(static_cast<std::size_t>(*v));
      }
    }
  }

  void unknown_keys_check() const {
    for (const auto& [k, n] : leaves_) {
      if (!used_.count(k)) fail(ErrorCode::ConfigError, "unknown config key '" + k + "' at " + describe(*n));
    }
  }

  [[noreturn]] static void bad(const std::string& key, const toml::node& n, const char* want) {
    fail(ErrorCode::ConfigError, "config key '" + key + "' must be " + want + " (at " + describe(n) + ")");
  }

 private:
  std::map<std::string, const toml::node*> leaves_;
  std::set<std::string> used_;
};

toml::table parse_toml(const std::string& text, const std::string& name) {
  try {
    return toml::parse(text, name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << name << ":" << e.source().begin.line << ": " << e.description();
    fail(ErrorCode::ConfigError, os.str());
  }
}

void resolve_paths(toml::table& t, const fs::path& base) {
  auto* paths = t["paths"].as_table();
  if (!paths) return;
  for (auto&& [k, v] : *paths) {
    if (auto* s = v.as_string()) {
      fs::path p(s->get());
      if (!p.empty() && p.is_relative()) *s = (base / p).lexically_normal().string();
    }
  }
}

void apply_override(toml::table& t, const std::string& key, const std::string& value) {
  if (key.empty()) fail(ErrorCode::ConfigError, "empty override key");
  std::vector<std::string> parts;
  for (auto p : io::split(key, '.')) parts.emplace_back(p);
  toml::table* cur = &t;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    auto* next = (*cur)[parts[i]].as_table();
    if (!next) {
      cur->insert_or_assign(parts[i], toml::table{});
      next = (*cur)[parts[i]].as_table();
    }
    cur = next;
  }
  toml::table parsed;
  bool literal = true;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    literal = false;
  }
  if (literal && parsed["v"].node()) {
    cur->insert_or_assign(parts.back(), *parsed["v"].node());
  } else {
    cur->insert_or_assign(parts.back(), value);
  }
  if (parts.front() == "paths") {
    if (auto* s = (*cur)[parts.back()].as_string(); s && !s->get().empty()) {
      *s = fs::absolute(fs::path(s->get())).lexically_normal().string();
    }
  }
}

void read_coupling(Reader& r, SynthSettings& s) {
  const auto* n = r.find("synth.coupling");
  if (!n) return;
  if (auto str = n->value<std::string>()) {
    if (*str != "default" && *str != "identity") Reader::bad("synth.coupling", *n, "\"default\", \"identity\" or a matrix");
    s.coupling = *str;
    return;
  }
  const auto* rows = n->as_array();
  if (!rows) Reader::bad("synth.coupling", *n, "\"default\", \"identity\" or a matrix");
  s.coupling = "matrix";
  s.spec.coupling.clear();
  for (const auto& row : *rows) {
    const auto* cols = row.as_array();
    if (!cols || cols->size() != kEmotionCount) Reader::bad("synth.coupling", row, "rows of four probabilities");
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
      auto v = (*cols)[i].value<double>();
      if (!v || *v < 0.0) Reader::bad("synth.coupling", row, "rows of four non-negative probabilities");
      p[i] = *v;
    }
    s.spec.coupling.push_back(p);
  }
}

PipelineConfig from_table(const toml::table& t) {
  Reader r(t);
  PipelineConfig c;
  r.get("seed", c.seed);
  r.get("out", c.out);
  std::string mode = "ag";
  r.get("mode", mode);
  if (mode != "ag" && mode != "hard-ag") fail(ErrorCode::ConfigError, "mode must be ag or hard-ag, got '" + mode + "'");
  c.mode = parse_anchor_mode(mode);
  r.get("corpora.source", c.source_corpus);
  r.get("corpora.target", c.target_corpus);

  auto& p = c.paths;
  r.get("paths.landmarks", p.landmarks);
  r.get("paths.alignments", p.alignments);
  r.get("paths.utterances", p.utterances);
  r.get("paths.segments", p.segments);
  r.get("paths.features", p.features);
  r.get("paths.labels", p.labels);
  r.get("paths.assignments", p.assignments);
  r.get("paths.acoustic_assignments", p.acoustic_assignments);
  r.get("paths.model", p.model);
  r.get("paths.weights", p.weights);
  r.get("paths.resume", p.resume);

  r.get("vowels.strict", c.strict_vowels);
  if (const auto* n = r.find("vowels.aliases")) {
    const auto* tbl = n->as_table();
    if (!tbl) Reader::bad("vowels.aliases", *n, "a table of label = vowel");
    for (const auto& [k, v] : *tbl) {
      auto sym = v.value<std::string>();
      if (!sym) Reader::bad("vowels.aliases", v, "a table of label = vowel");
      auto vowel = vowel_from_symbol(*sym);
      if (!vowel) fail(ErrorCode::ConfigError, "vowels.aliases: unknown vowel '" + *sym + "'");
      c.vowels.set(std::string(k.str()), *vowel);
    }
  }

  auto& cl = c.cluster;
  r.get("cluster.k", cl.k);
  std::vector<std::size_t> elbow;
  r.get("cluster.elbow", elbow);
  if (!elbow.empty()) {
    if (elbow.size() != 2) fail(ErrorCode::ConfigError, "cluster.elbow must be [k_min, k_max]");
    cl.elbow = std::make_pair(elbow[0], elbow[1]);
  }
  r.get("cluster.gamma", cl.params.gamma);
  r.get("cluster.max_iter", cl.fit.max_iter);
  r.get("cluster.n_init", cl.fit.n_init);
  r.get("cluster.barycenter_iter", cl.fit.barycenter_iter);
  r.get("cluster.barycenter_step", cl.fit.barycenter_step);
  std::string modality = modality_name(cl.fit.modality);
  r.get("cluster.modality", modality);
  cl.fit.modality = parse_modality(modality);

  r.get("overlap.threshold", c.overlap_threshold);

  auto& a = c.anchor;
  r.get("anchor.alpha", a.alpha);
  r.get("anchor.beta", a.beta);
  r.get("anchor.gamma_total", a.gamma_total);
  r.get("anchor.threshold", a.threshold_percent);
  r.get("anchor.hinge", a.hinge);
  r.get("anchor.negatives_common_only", a.negatives_common_only);

  auto& tr = c.train;
  r.get("train.lr", tr.lr);
  r.get("train.weight_decay", tr.weight_decay);
  r.get("train.batch_size", tr.batch_size);
  r.get("train.max_epochs", tr.max_epochs);
  r.get("train.patience", tr.patience);
  r.get("train.hidden", tr.hidden);
  r.get("train.val_fraction", c.split.val_fraction);
  r.get("train.test_fraction", c.split.test_fraction);
  r.get("train.stop_after", c.stop_after);
  tr.seed = c.seed;

  r.get("evaluate.corpus", c.evaluate_corpus);

  auto& s = c.synth;
  r.get("synth.n_families", s.spec.n_families);
  r.get("synth.samples_per_family", s.spec.samples_per_family);
  r.get("synth.noise_sigma", s.spec.noise_sigma);
  r.get("synth.length_min", s.spec.length_min);
  r.get("synth.length_max", s.spec.length_max);
  r.get("synth.cross_corpus_shift", s.spec.cross_corpus_shift);
  read_coupling(r, s);
  r.get("synth.feature_dim", s.spec.feature_dim);
  r.get("synth.acoustic_dim", s.spec.acoustic_dim);
  r.get("synth.feature_noise", s.spec.feature_noise);
  r.get("synth.emotion_separation", s.spec.emotion_separation);
  r.get("synth.family_separation", s.spec.family_separation);
  r.get("synth.gesture_amplitude", s.spec.gesture_amplitude);
  r.get("synth.landmark_utterances", s.landmark_utterances);
  s.spec.source_corpus = c.source_corpus;
  s.spec.target_corpus = c.target_corpus;
  s.spec.seed = c.seed;
  if (s.coupling == "identity") s.spec.coupling = synth::identity_coupling(s.spec.n_families);

  r.unknown_keys_check();
  return c;
}

void validate(const PipelineConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
  };
  need(c.source_corpus != c.target_corpus, "source and target corpus names must differ");
  need(c.cluster.k >= 2, "cluster.k must be >= 2");
  if (c.cluster.elbow) {
    need(c.cluster.elbow->first >= 2 && c.cluster.elbow->second >= c.cluster.elbow->first + 2,
         "cluster.elbow needs 2 <= k_min and at least three k values");
  }
  need(c.cluster.params.gamma > 0.0, "cluster.gamma must be > 0");
  need(c.cluster.fit.max_iter >= 1 && c.cluster.fit.n_init >= 1, "cluster.max_iter and cluster.n_init must be >= 1");
  need(c.overlap_threshold >= 0.0 && c.overlap_threshold <= 100.0, "overlap.threshold must be in [0, 100]");
  c.anchor.validate();
  c.train.validate();
  need(c.split.val_fraction > 0.0 && c.split.test_fraction > 0.0 &&
           c.split.val_fraction + c.split.test_fraction < 1.0,
       "train.val_fraction and train.test_fraction must be positive and sum below 1");
  const auto& s = c.synth.spec;
  need(s.n_families >= 2, "synth.n_families must be >= 2");
  need(s.samples_per_family >= 1, "synth.samples_per_family must be >= 1");
  need(s.noise_sigma >= 0.0 && s.feature_noise >= 0.0, "synth noise levels must be >= 0");
  need(s.length_min >= kMinSegmentFrames && s.length_max >= s.length_min,
       "synth lengths need 2 <= length_min <= length_max");
  need(s.feature_dim >= 1 && s.acoustic_dim >= 1, "synth dimensions must be >= 1");
  if (c.synth.coupling == "matrix") {
    need(s.coupling.size() == s.n_families, "synth.coupling needs one row per family");
  }

  const std::pair<const char*, const fs::path*> paths[] = {
      {"landmarks", &c.paths.landmarks}, {"alignments", &c.paths.alignments},
      {"utterances", &c.paths.utterances}, {"segments", &c.paths.segments},
      {"features", &c.paths.features}, {"labels", &c.paths.labels},
      {"assignments", &c.paths.assignments}, {"acoustic_assignments", &c.paths.acoustic_assignments},
      {"model", &c.paths.model}, {"weights", &c.paths.weights}, {"resume", &c.paths.resume}};
  for (const auto& [name, p] : paths) {
    if (!p->empty() && !fs::exists(*p)) {
      fail(ErrorCode::ConfigError, std::string("paths.") + name + " does not exist: " + p->string());
    }
  }
}

}  // namespace

std::string PipelineConfig::canonical_json() const {
  Json j;
  j["seed"] = seed;
  j["mode"] = anchor_mode_name(mode);
  j["corpora"] = {{"source", source_corpus}, {"target", target_corpus}};
  j["paths"] = {{"landmarks", paths.landmarks.string()},
                {"alignments", paths.alignments.string()},
                {"utterances", paths.utterances.string()},
                {"segments", paths.segments.string()},
                {"features", paths.features.string()},
                {"labels", paths.labels.string()},
                {"assignments", paths.assignments.string()},
                {"acoustic_assignments", paths.acoustic_assignments.string()},
                {"model", paths.model.string()},
                {"weights", paths.weights.string()},
                {"resume", paths.resume.string()}};
  Json aliases = Json::object();
  for (const auto& [k, v] : vowels.entries()) aliases[k] = std::string(vowel_symbol(v));
  j["vowels"] = {{"strict", strict_vowels}, {"aliases", aliases}};
  Json cl = {{"k", cluster.k},
             {"gamma", cluster.params.gamma},
             {"max_iter", cluster.fit.max_iter},
             {"n_init", cluster.fit.n_init},
             {"barycenter_iter", cluster.fit.barycenter_iter},
             {"barycenter_step", cluster.fit.barycenter_step},
             {"modality", modality_name(cluster.fit.modality)}};
  cl["elbow"] = cluster.elbow ? Json::array({cluster.elbow->first, cluster.elbow->second}) : Json(nullptr);
  j["cluster"] = cl;
  j["overlap"] = {{"threshold", overlap_threshold}};
  j["anchor"] = {{"alpha", anchor.alpha},
                 {"beta", anchor.beta},
                 {"gamma_total", anchor.gamma_total},
                 {"threshold", anchor.threshold_percent},
                 {"hinge", anchor.hinge},
                 {"negatives_common_only", anchor.negatives_common_only}};
  j["train"] = {{"lr", train.lr},
                {"weight_decay", train.weight_decay},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"hidden", train.hidden},
                {"val_fraction", split.val_fraction},
                {"test_fraction", split.test_fraction},
                {"stop_after", stop_after}};
  j["evaluate"] = {{"corpus", evaluate_corpus}};
  const auto& s = synth.spec;
  Json coupling = synth.coupling == "matrix" ? Json(s.coupling) : Json(synth.coupling);
  j["synth"] = {{"n_families", s.n_families},
                {"samples_per_family", s.samples_per_family},
                {"noise_sigma", s.noise_sigma},
                {"length_min", s.length_min},
                {"length_max", s.length_max},
                {"cross_corpus_shift", s.cross_corpus_shift},
                {"coupling", coupling},
                {"feature_dim", s.feature_dim},
                {"acoustic_dim", s.acoustic_dim},
                {"feature_noise", s.feature_noise},
                {"emotion_separation", s.emotion_separation},
                {"family_separation", s.family_separation},
                {"gesture_amplitude", s.gesture_amplitude},
                {"landmark_utterances", synth.landmark_utterances}};
  return j.dump();
}

std::string PipelineConfig::hash() const { return io::hex64(io::fnv1a64(canonical_json())); }

namespace {

PipelineConfig build(toml::table t, const fs::path& base,
                     const std::vector<std::pair<std::string, std::string>>& overrides) {
  resolve_paths(t, base);
  for (const auto& [k, v] : overrides) apply_override(t, k, v);
  PipelineConfig c = from_table(t);
  validate(c);
  return c;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& toml_text, const fs::path& base_dir,
                                     const std::vector<std::pair<std::string, std::string>>& overrides) {
  const auto base = base_dir.empty() ? fs::current_path() : fs::absolute(base_dir);
  return build(parse_toml(toml_text, "config"), base, overrides);
}

PipelineConfig load_pipeline_config(const std::optional<fs::path>& file,
                                    const std::vector<std::pair<std::string, std::string>>& overrides) {
  if (!file) return parse_pipeline_config("", {}, overrides);
  if (!fs::exists(*file)) fail(ErrorCode::ConfigError, "config file not found: " + file->string());
  std::string text;
  try {
    text = io::read_text(*file);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  return build(parse_toml(text, file->string()), fs::absolute(*file).parent_path(), overrides);
}

}  // namespace agcc

// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "agcc/agcc.h"

namespace {

struct Overrides {
  std::vector<std::pair<std::string, std::string>> items;

  template <class T>
  void add_if(const std::string& key, const std::optional<T>& v) {
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
      items.emplace_back(key, quote(*v));
    } else {
      items.emplace_back(key, std::to_string(*v));
    }
  }

  // TOML string literal, so values such as paths are never read as numbers.
  static std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  }
};

int report(agcc_status st) {
  std::cerr << "error: " << agcc_last_error() << "\n";
  return agcc_exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mouth-articulation anchoring for cross-corpus emotion transfer"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, out_dir, mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma_total;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "TOML configuration file");
  app.add_option("--seed", seed, "root seed for every random substream");
  app.add_option("--out", out_dir, "parent directory of run directories");
  app.add_option("--mode", mode, "anchoring mode")->check(CLI::IsMember({"ag", "hard-ag"}));
  app.add_option("--gamma-total", gamma_total, "weight of the anchoring loss");
  app.add_option("--set", sets, "override any config key: section.key=value");

  std::map<std::string, std::optional<std::string>> paths;
  auto path_opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option("--" + flag, paths[key], help);
  };

  auto* synth = app.add_subcommand("synth", "generate a two-corpus synthetic dataset");
  std::optional<std::size_t> families, per_family, landmark_utts;
  std::optional<double> noise, shift;
  std::optional<std::string> coupling;
  synth->add_option("--families", families);
  synth->add_option("--per-family", per_family, "samples per family and corpus");
  synth->add_option("--noise", noise, "gesture noise sigma");
  synth->add_option("--shift", shift, "cross-corpus feature shift");
  synth->add_option("--coupling", coupling)->check(CLI::IsMember({"default", "identity"}));
  synth->add_option("--landmarks", landmark_utts, "landmark utterances per corpus (0: none)");

  auto* normalize = app.add_subcommand("normalize", "normalize landmark CSVs");
  path_opt(normalize, "landmarks", "paths.landmarks", "directory of landmark CSVs");

  auto* segment = app.add_subcommand("segment", "cut vowel gesture segments");
  path_opt(segment, "landmarks", "paths.landmarks", "directory of landmark CSVs");
  path_opt(segment, "alignments", "paths.alignments", "directory of alignment TSVs");
  path_opt(segment, "utterances", "paths.utterances", "utterance metadata CSV");
  bool strict = false;
  segment->add_flag("--strict", strict, "reject unknown stress-marked vowel labels");

  auto* cluster = app.add_subcommand("cluster", "time-series k-means over segments");
  path_opt(cluster, "segments", "paths.segments", "segment manifest");
  std::optional<std::size_t> k, n_init;
  std::vector<std::size_t> elbow;
  std::optional<double> sdtw_gamma;
  std::optional<std::string> modality;
  cluster->add_option("--k", k);
  cluster->add_option("--elbow", elbow, "k range for the elbow search")->expected(2);
  cluster->add_option("--gamma", sdtw_gamma, "soft-DTW smoothing");
  cluster->add_option("--n-init", n_init);
  cluster->add_option("--modality", modality)->check(CLI::IsMember({"gesture", "acoustic"}));

  auto* overlap = app.add_subcommand("overlap", "cross-corpus cluster overlap tables");
  path_opt(overlap, "segments", "paths.segments", "segment manifest");
  path_opt(overlap, "assignments", "paths.assignments", "cluster assignments CSV");
  std::optional<double> threshold;
  overlap->add_option("--threshold", threshold, "percent share for a common cluster");

  auto* associate = app.add_subcommand("associate", "gesture/acoustic cluster association heatmaps");
  path_opt(associate, "segments", "paths.segments", "segment manifest");
  path_opt(associate, "assignments", "paths.assignments", "gesture cluster assignments CSV");
  path_opt(associate, "acoustic-assignments", "paths.acoustic_assignments", "acoustic cluster assignments CSV");

  auto* train = app.add_subcommand("train", "train the classifier with anchoring");
  path_opt(train, "features", "paths.features", "f32 feature matrix");
  path_opt(train, "labels", "paths.labels", "labels CSV");
  path_opt(train, "segments", "paths.segments", "segment manifest");
  path_opt(train, "assignments", "paths.assignments", "gesture cluster assignments CSV");
  path_opt(train, "model", "paths.model", "cluster model directory");
  path_opt(train, "resume", "paths.resume", "checkpoint directory to continue from");
  std::optional<std::size_t> stop_after, max_epochs;
  train->add_option("--stop-after", stop_after, "interrupt after this many epochs");
  train->add_option("--max-epochs", max_epochs);

  auto* evaluate = app.add_subcommand("evaluate", "UAR of a trained classifier on one corpus");
  path_opt(evaluate, "weights", "paths.weights", "trained classifier directory");
  path_opt(evaluate, "features", "paths.features", "f32 feature matrix");
  path_opt(evaluate, "labels", "paths.labels", "labels CSV");
  std::optional<std::string> corpus;
  evaluate->add_option("--corpus", corpus);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Overrides ov;
  ov.add_if("seed", seed);
  ov.add_if("out", out_dir);
  ov.add_if("mode", mode);
  ov.add_if("anchor.gamma_total", gamma_total);
  ov.add_if("synth.n_families", families);
  ov.add_if("synth.samples_per_family", per_family);
  ov.add_if("synth.noise_sigma", noise);
  ov.add_if("synth.cross_corpus_shift", shift);
  ov.add_if("synth.coupling", coupling);
  ov.add_if("synth.landmark_utterances", landmark_utts);
  if (strict) ov.items.emplace_back("vowels.strict", "true");
  ov.add_if("cluster.k", k);
  if (!elbow.empty()) ov.items.emplace_back("cluster.elbow", "[" + std::to_string(elbow[0]) + "," + std::to_string(elbow[1]) + "]");
  ov.add_if("cluster.gamma", sdtw_gamma);
  ov.add_if("cluster.n_init", n_init);
  ov.add_if("cluster.modality", modality);
  ov.add_if("overlap.threshold", threshold);
  ov.add_if("train.stop_after", stop_after);
  ov.add_if("train.max_epochs", max_epochs);
  ov.add_if("evaluate.corpus", corpus);
  for (const auto& [key, v] : paths) ov.add_if(key, v);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: ConfigError: --set expects key=value, got '" << s << "'\n";
      return 2;
    }
    ov.items.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }

  agcc_config* cfg = nullptr;
  agcc_status st = agcc_config_new(&cfg);
  if (st != AGCC_OK) return report(st);
  if (config_path && (st = agcc_config_set_file(cfg, config_path->c_str())) != AGCC_OK) {
    agcc_config_free(cfg);
    return report(st);
  }
  for (const auto& [key, v] : ov.items) {
    if ((st = agcc_config_set(cfg, key.c_str(), v.c_str())) != AGCC_OK) {
      agcc_config_free(cfg);
      return report(st);
    }
  }

  const std::string command = app.get_subcommands().front()->get_name();
  agcc_run* run = nullptr;
  st = agcc_run_command(cfg, command.c_str(), &run);
  agcc_config_free(cfg);
  if (st != AGCC_OK) return report(st);
  for (std::size_t i = 0; i < agcc_run_warning_count(run); ++i) std::cerr << "warning: " << agcc_run_warning(run, i) << "\n";
  std::cout << "run_dir: " << agcc_run_dir(run) << "\n" << agcc_run_summary(run) << "\n";
  agcc_run_free(run);
  return 0;
}

// SPDX-License-Identifier: Apache-2.0
#include "agcc/agcc.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agcc/anchoring.hpp"
#include "agcc/clustering.hpp"
#include "agcc/corpus_analysis.hpp"
#include "agcc/error.hpp"
#include "agcc/geometry.hpp"
#include "agcc/pipeline.hpp"
#include "agcc/soft_dtw.hpp"
#include "agcc/training.hpp"

struct agcc_model {
  agcc::ClusterModel model;
  agcc::CentroidGeometry geometry;
};

struct agcc_config {
  std::optional<std::string> file;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct agcc_run {
  std::string dir;
  std::string summary;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

struct ArgError {
  const char* what;
};

template <class F>
agcc_status guard(F&& f) noexcept {
  try {
    f();
    g_last_error.clear();
    return AGCC_OK;
  } catch (const agcc::Error& e) {
    g_last_error = e.what();
    return static_cast<agcc_status>(static_cast<int>(e.code()));
  } catch (const ArgError& e) {
    g_last_error = std::string("InvalidArgument: ") + e.what;
    return AGCC_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = std::string("IoError: ") + e.what();
    return AGCC_IO_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "InternalError: out of memory";
    return AGCC_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = std::string("InternalError: ") + e.what();
    return AGCC_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "InternalError: unknown exception";
    return AGCC_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw ArgError{what};
}

agcc::Series series_from(const double* data, std::size_t frames, std::size_t dims) {
  return agcc::Series(frames, dims, std::vector<double>(data, data + frames * dims));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* agcc_version(void) { return "1.0.0"; }

const char* agcc_status_name(agcc_status s) {
  switch (s) {
    case AGCC_INVALID_ARGUMENT: return "InvalidArgument";
    case AGCC_INTERNAL_ERROR: return "InternalError";
    default: return agcc::error_code_name(static_cast<agcc::ErrorCode>(static_cast<int>(s)));
  }
}

int agcc_exit_code(agcc_status s) {
  switch (s) {
    case AGCC_INVALID_ARGUMENT: return 2;
    case AGCC_INTERNAL_ERROR: return 1;
    default: return agcc::exit_code_for(static_cast<agcc::ErrorCode>(static_cast<int>(s)));
  }
}

const char* agcc_last_error(void) { return g_last_error.c_str(); }

void agcc_string_free(char* s) { std::free(s); }

agcc_status agcc_soft_dtw(const double* a, size_t frames_a, const double* b, size_t frames_b, size_t dims,
                          double gamma, double* value) {
  return guard([&] {
    need(a, "a is null");
    need(b, "b is null");
    need(value, "value is null");
    *value = agcc::soft_dtw(series_from(a, frames_a, dims), series_from(b, frames_b, dims), {gamma});
  });
}

agcc_status agcc_soft_dtw_grad(const double* a, size_t frames_a, const double* b, size_t frames_b, size_t dims,
                               double gamma, double* value, double* grad_a) {
  return guard([&] {
    need(a, "a is null");
    need(b, "b is null");
    need(grad_a, "grad_a is null");
    const auto r = agcc::soft_dtw_value_grad(series_from(a, frames_a, dims), series_from(b, frames_b, dims), {gamma});
    if (value) *value = r.value;
    std::copy(r.grad.data().begin(), r.grad.data().end(), grad_a);
  });
}

agcc_status agcc_normalize_face(const double* xy, double* out_xy) {
  return guard([&] {
    need(xy, "xy is null");
    need(out_xy, "out_xy is null");
    agcc::FaceFrame f;
    for (std::size_t i = 0; i < agcc::kFaceLandmarks; ++i) f[i] = {xy[2 * i], xy[2 * i + 1]};
    const auto n = agcc::normalize_frame(f);
    for (std::size_t i = 0; i < agcc::kFaceLandmarks; ++i) {
      out_xy[2 * i] = n[i].x;
      out_xy[2 * i + 1] = n[i].y;
    }
  });
}

agcc_status agcc_overlap_counts(const size_t* counts1, const size_t* counts2, size_t k, double threshold_percent,
                                double* sim_percent, size_t* n_common) {
  return guard([&] {
    need(counts1, "counts1 is null");
    need(counts2, "counts2 is null");
    need(sim_percent, "sim_percent is null");
    const auto r = agcc::overlap_counts(std::span<const std::size_t>(counts1, k),
                                        std::span<const std::size_t>(counts2, k), threshold_percent);
    *sim_percent = r.sim_percent;
    if (n_common) *n_common = r.k_ct;
  });
}

agcc_status agcc_uar(const int* predictions, const int* labels, size_t n, double* out) {
  return guard([&] {
    need(predictions, "predictions is null");
    need(labels, "labels is null");
    need(out, "out is null");
    *out = agcc::uar(std::span<const int>(predictions, n), std::span<const int>(labels, n));
  });
}

agcc_status agcc_ag_loss(const double* z, size_t n, size_t dim, const size_t* triplets, const double* weights,
                         size_t n_triplets, double alpha, int hinge, double* value, double* grad) {
  return guard([&] {
    need(z, "z is null");
    need(triplets, "triplets is null");
    need(weights, "weights is null");
    need(value, "value is null");
    std::vector<agcc::Triplet> ts(n_triplets);
    for (std::size_t i = 0; i < n_triplets; ++i) {
      ts[i] = {triplets[3 * i], triplets[3 * i + 1], triplets[3 * i + 2], weights[i]};
      if (ts[i].anchor >= n || ts[i].positive >= n || ts[i].negative >= n) throw ArgError{"triplet index out of range"};
    }
    agcc::AnchorLossConfig cfg;
    cfg.alpha = alpha;
    cfg.hinge = hinge != 0;
    const auto r = agcc::ag_loss(std::span<const double>(z, n * dim), dim, ts, cfg);
    *value = r.value;
    if (grad) std::copy(r.grad.begin(), r.grad.end(), grad);
  });
}

agcc_status agcc_model_fit(const double* const* series, const size_t* frames, size_t n, size_t dims, size_t k,
                           double gamma, uint64_t seed, agcc_model** out) {
  return guard([&] {
    need(series, "series is null");
    need(frames, "frames is null");
    need(out, "out is null");
    std::vector<agcc::Series> xs;
    for (std::size_t i = 0; i < n; ++i) {
      need(series[i], "series entry is null");
      xs.push_back(series_from(series[i], frames[i], dims));
    }
    std::vector<const agcc::Series*> ptrs;
    for (const auto& s : xs) ptrs.push_back(&s);
    auto fr = agcc::fit(ptrs, k, {gamma}, seed);
    agcc::CentroidGeometry geo(fr.model);
    *out = new agcc_model{std::move(fr.model), std::move(geo)};
  });
}

agcc_status agcc_model_load(const char* dir, agcc_model** out) {
  return guard([&] {
    need(dir, "dir is null");
    need(out, "out is null");
    auto m = agcc::load_model(dir);
    agcc::CentroidGeometry geo(m);
    *out = new agcc_model{std::move(m), std::move(geo)};
  });
}

agcc_status agcc_model_save(const agcc_model* m, const char* dir) {
  return guard([&] {
    need(m, "model is null");
    need(dir, "dir is null");
    agcc::save_model(m->model, dir);
  });
}

size_t agcc_model_k(const agcc_model* m) { return m ? m->model.k() : 0; }

size_t agcc_model_dims(const agcc_model* m) { return m ? m->model.dims() : 0; }

agcc_status agcc_model_predict(const agcc_model* m, const double* series, size_t frames, int* cluster,
                               double* distance) {
  return guard([&] {
    need(m, "model is null");
    need(series, "series is null");
    need(cluster, "cluster is null");
    const auto s = series_from(series, frames, m->model.dims());
    const agcc::Series* p = &s;
    const auto a = agcc::predict(m->model, std::span<const agcc::Series* const>(&p, 1));
    *cluster = a.front().cluster_id;
    if (distance) *distance = a.front().distance;
  });
}

agcc_status agcc_model_weight(const agcc_model* m, int cluster_i, int cluster_n, double beta, double* out) {
  return guard([&] {
    need(m, "model is null");
    need(out, "out is null");
    *out = m->geometry.weight(cluster_i, cluster_n, beta);
  });
}

void agcc_model_free(agcc_model* m) { delete m; }

agcc_status agcc_config_new(agcc_config** out) {
  return guard([&] {
    need(out, "out is null");
    *out = new agcc_config{};
  });
}

agcc_status agcc_config_set_file(agcc_config* c, const char* path) {
  return guard([&] {
    need(c, "config is null");
    need(path, "path is null");
    c->file = path;
  });
}

agcc_status agcc_config_set(agcc_config* c, const char* key, const char* value) {
  return guard([&] {
    need(c, "config is null");
    need(key, "key is null");
    need(value, "value is null");
    c->overrides.emplace_back(key, value);
  });
}

agcc_status agcc_config_resolve(const agcc_config* c, char** json_out) {
  return guard([&] {
    need(c, "config is null");
    need(json_out, "json_out is null");
    const auto cfg = agcc::load_pipeline_config(c->file, c->overrides);
    auto j = nlohmann::ordered_json::parse(cfg.canonical_json());
    j["out"] = cfg.out.string();
    j["config_hash"] = cfg.hash();
    *json_out = dup_string(j.dump(2));
  });
}

void agcc_config_free(agcc_config* c) { delete c; }

agcc_status agcc_run_command(const agcc_config* c, const char* command, agcc_run** out) {
  return guard([&] {
    need(c, "config is null");
    need(command, "command is null");
    need(out, "out is null");
    const auto cmd = agcc::parse_command(command);
    if (!cmd) agcc::fail(agcc::ErrorCode::ConfigError, std::string("unknown command '") + command + "'");
    const auto cfg = agcc::load_pipeline_config(c->file, c->overrides);
    auto r = agcc::run_command(*cmd, cfg);
    *out = new agcc_run{r.run_dir.string(), std::move(r.summary_json), std::move(r.warnings)};
  });
}

const char* agcc_run_dir(const agcc_run* r) { return r ? r->dir.c_str() : ""; }

const char* agcc_run_summary(const agcc_run* r) { return r ? r->summary.c_str() : ""; }

size_t agcc_run_warning_count(const agcc_run* r) { return r ? r->warnings.size() : 0; }

const char* agcc_run_warning(const agcc_run* r, size_t i) {
  return r && i < r->warnings.size() ? r->warnings[i].c_str() : "";
}

void agcc_run_free(agcc_run* r) { delete r; }

agcc_status agcc_compare_histories(const char* history_a, const char* history_b, char** json_out) {
  return guard([&] {
    need(history_a, "history_a is null");
    need(history_b, "history_b is null");
    need(json_out, "json_out is null");
    *json_out = dup_string(agcc::compare_histories(history_a, history_b));
  });
}

agcc_status agcc_content_hash(const char* dir, char** hex_out) {
  return guard([&] {
    need(dir, "dir is null");
    need(hex_out, "hex_out is null");
    *hex_out = dup_string(agcc::content_hash(dir));
  });
}

}  // extern "C"

// SPDX-License-Identifier: Apache-2.0
#include "agcc/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "agcc/error.hpp"

namespace agcc {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) fail(ErrorCode::ConfigError, "network needs at least input and output sizes");
  for (auto s : sizes_) {
    if (s == 0) fail(ErrorCode::ConfigError, "layer sizes must be positive");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(off);
    off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(off, 0.0);
}

void Mlp::init(std::mt19937_64& rng) {
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < in * out; ++i) w[i] = u(rng);
    std::fill(w + in * out, w + in * out + out, 0.0);
  }
}

void Mlp::forward(std::span<const double> x, std::size_t batch, Cache& cache) const {
  if (x.size() != batch * input_dim()) fail(ErrorCode::DimensionMismatch, "input batch shape");
  cache.batch = batch;
  cache.acts.resize(sizes_.size());
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    const auto& a = cache.acts[l];
    auto& z = cache.acts[l + 1];
    z.assign(batch * out, 0.0);
    const bool relu = l + 1 < layers();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* ar = a.data() + r * in;
      double* zr = z.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double* wo = w + o * in;
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += wo[i] * ar[i];
        zr[o] = relu ? std::max(0.0, s) : s;
      }
    }
  }
}

void Mlp::backward(const Cache& cache, std::span<const double> d_logits, std::span<const double> d_embedding,
                   std::vector<double>& grad) const {
  const std::size_t batch = cache.batch;
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
  const std::size_t L = layers();
  // delta holds d loss / d (layer output) for the layer being processed
  std::vector<double> delta;
  std::size_t start;
  if (!d_logits.empty()) {
    if (d_logits.size() != batch * output_dim()) fail(ErrorCode::DimensionMismatch, "logit gradient shape");
    delta.assign(d_logits.begin(), d_logits.end());
    start = L;
  } else {
    delta.assign(batch * embedding_dim(), 0.0);
    start = L - 1;
  }
  for (std::size_t l = start; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    if (l + 1 == L - 1 && !d_embedding.empty()) {
      if (d_embedding.size() != batch * out) fail(ErrorCode::DimensionMismatch, "embedding gradient shape");
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += d_embedding[i];
    }
    if (l + 1 < L) {
      // through the ReLU of this layer's output
      const auto& y = cache.acts[l + 1];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(y[i] > 0.0)) delta[i] = 0.0;
      }
    }
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    const auto& a = cache.acts[l];
    for (std::size_t r = 0; r < batch; ++r) {
      const double* ar = a.data() + r * in;
      const double* dr = delta.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        double* gwo = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) gwo[i] += d * ar[i];
        gb[o] += d;
      }
    }
    if (l == 0) break;
    std::vector<double> prev(batch * in, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dr = delta.data() + r * out;
      double* pr = prev.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        const double* wo = w + o * in;
        for (std::size_t i = 0; i < in; ++i) pr[i] += d * wo[i];
      }
    }
    delta = std::move(prev);
  }
}

std::vector<int> Mlp::predict(std::span<const double> x, std::size_t batch) const {
  Cache c;
  forward(x, batch, c);
  const auto& z = c.logits();
  std::vector<int> out(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* zr = z.data() + r * output_dim();
    out[r] = static_cast<int>(std::max_element(zr, zr + output_dim()) - zr);
  }
  return out;
}

double softmax_cross_entropy(std::span<const double> logits, std::span<const int> labels, std::size_t classes,
                             std::vector<double>& d_logits) {
  const std::size_t batch = labels.size();
  if (batch == 0) fail(ErrorCode::EmptyBatch, "empty batch");
  if (logits.size() != batch * classes) fail(ErrorCode::DimensionMismatch, "logits shape");
  d_logits.assign(logits.size(), 0.0);
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* z = logits.data() + r * classes;
    double* d = d_logits.data() + r * classes;
    const double mx = *std::max_element(z, z + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(z[c] - mx);
    const double lse = mx + std::log(s);
    const auto y = static_cast<std::size_t>(labels[r]);
    if (y >= classes) fail(ErrorCode::DataError, "label out of range");
    loss += lse - z[y];
    for (std::size_t c = 0; c < classes; ++c) d[c] = std::exp(z[c] - lse) * inv;
    d[y] -= inv;
  }
  return loss * inv;
}

void Adam::step(std::vector<double>& params, std::vector<double>& grad) {
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] + weight_decay * params[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

}  // namespace agcc

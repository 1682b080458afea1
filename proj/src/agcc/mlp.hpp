// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>
#include <vector>

namespace agcc {

/// Fully connected ReLU network over row-major batches. Parameters live in
/// one flat vector: for each layer, W (out x in) then b (out).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);  // {input, hidden..., classes}

  // He-uniform weights, zero biases.
  void init(std::mt19937_64& rng);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t layers() const noexcept { return sizes_.size() - 1; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t output_dim() const noexcept { return sizes_.back(); }
  std::size_t embedding_dim() const noexcept { return sizes_[sizes_.size() - 2]; }
  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }

  struct Cache {
    std::size_t batch = 0;
    std::vector<std::vector<double>> acts;  // acts[0] input, acts[l] layer-l output
    const std::vector<double>& logits() const { return acts.back(); }
    const std::vector<double>& embedding() const { return acts[acts.size() - 2]; }
  };

  void forward(std::span<const double> x, std::size_t batch, Cache& cache) const;

  /// Adds the parameter gradient for upstream gradients on the logits and/or
  /// on the penultimate activations; either span may be empty.
  void backward(const Cache& cache, std::span<const double> d_logits, std::span<const double> d_embedding,
                std::vector<double>& grad) const;

  std::vector<int> predict(std::span<const double> x, std::size_t batch) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Mean softmax cross-entropy; writes d loss / d logits into `d_logits`.
double softmax_cross_entropy(std::span<const double> logits, std::span<const int> labels, std::size_t classes,
                             std::vector<double>& d_logits);

/// Adaptive-moment optimizer with L2 weight decay folded into the gradient.
struct Adam {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
  std::size_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  void step(std::vector<double>& params, std::vector<double>& grad);
};

}  // namespace agcc

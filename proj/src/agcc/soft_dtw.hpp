// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agcc/series.hpp"

namespace agcc {

struct SoftDtwParams {
  double gamma = 1.0;  // smoothing, > 0; pairwise cost is squared Euclidean
};

/// Soft-DTW discrepancy between two T x D series:
///   R(i,j) = |a_i - b_j|^2 + softmin_gamma(R(i-1,j), R(i,j-1), R(i-1,j-1))
/// with softmin_gamma(v) = -gamma * log sum exp(-v / gamma), evaluated in
/// shifted log-sum-exp form. Throws DimensionMismatch, NonFinite, EmptySet.
double soft_dtw(const Series& a, const Series& b, const SoftDtwParams& p);

struct SoftDtwValueGrad {
  double value = 0.0;
  Series grad;  // d value / d a, same shape as a
};

/// Forward pass plus the backward recursion over expected alignments.
SoftDtwValueGrad soft_dtw_value_grad(const Series& a, const Series& b, const SoftDtwParams& p);

inline Series soft_dtw_grad(const Series& a, const Series& b, const SoftDtwParams& p) {
  return soft_dtw_value_grad(a, b, p).grad;
}

struct BarycenterOptions {
  std::size_t length = 0;       // 0: median member length (rounded, min 2)
  std::size_t max_iter = 30;
  double step = 0.25;           // initial step on the member-averaged gradient
  double rel_tol = 1e-7;
  const Series* init = nullptr; // warm start; must have `length` frames when given
};

struct BarycenterResult {
  Series center;
  std::vector<double> objective;  // sum over members; entry 0 is the initial value
};

/// Gradient descent on sum_i soft_dtw(center, s_i) with backtracking: a step
/// that would increase the objective is halved until it does not, so the
/// recorded objective never increases. Without `init`, starts from the
/// medoid resampled to the target length. Throws EmptySet.
BarycenterResult soft_dtw_barycenter(std::span<const Series* const> members, const SoftDtwParams& p,
                                     const BarycenterOptions& opts = {});
BarycenterResult soft_dtw_barycenter(std::span<const Series> members, const SoftDtwParams& p,
                                     const BarycenterOptions& opts = {});

std::size_t median_length(std::span<const Series* const> members);

// Index of the member with the least summed soft-DTW to the others (ties: lowest).
std::size_t medoid_index(std::span<const Series* const> members, const SoftDtwParams& p);

// Full pairwise matrix, row-major n x n.
std::vector<double> soft_dtw_matrix(std::span<const Series* const> xs, const SoftDtwParams& p);

}  // namespace agcc

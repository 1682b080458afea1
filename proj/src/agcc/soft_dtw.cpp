// SPDX-License-Identifier: Apache-2.0
#include "agcc/soft_dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agcc/error.hpp"

namespace agcc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_inputs(const Series& a, const Series& b, const SoftDtwParams& p) {
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
    fail(ErrorCode::ConfigError, "soft-DTW gamma must be a positive finite number");
  }
  if (a.empty() || b.empty()) fail(ErrorCode::EmptySet, "soft-DTW needs non-empty series");
  if (a.dims() != b.dims()) {
    fail(ErrorCode::DimensionMismatch, "soft-DTW inputs have " + std::to_string(a.dims()) + " and " +
                                           std::to_string(b.dims()) + " columns");
  }
  if (!a.all_finite() || !b.all_finite()) fail(ErrorCode::NonFinite, "soft-DTW input is not finite");
}

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - y[d];
    s += diff * diff;
  }
  return s;
}

double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min({a, b, c});
  if (m == kInf) return kInf;
  const double s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) + std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

// Cost matrix and accumulated R, both stored with one leading border row and
// column so that R(0,0) = 0 and R(i,0) = R(0,j) = +inf.
struct Forward {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> cost;  // (m+2) x (n+2), zero-padded
  std::vector<double> r;     // (m+2) x (n+2)

  double& c(std::size_t i, std::size_t j) { return cost[i * (n + 2) + j]; }
  double& R(std::size_t i, std::size_t j) { return r[i * (n + 2) + j]; }
};

Forward forward(const Series& a, const Series& b, double gamma) {
  Forward f;
  f.m = a.frames();
  f.n = b.frames();
  const std::size_t w = f.n + 2;
  f.cost.assign((f.m + 2) * w, 0.0);
  f.r.assign((f.m + 2) * w, kInf);
  f.R(0, 0) = 0.0;
  for (std::size_t i = 1; i <= f.m; ++i) {
    const auto ai = a.row(i - 1);
    for (std::size_t j = 1; j <= f.n; ++j) {
      const double cij = sq_dist(ai, b.row(j - 1));
      f.c(i, j) = cij;
      f.R(i, j) = cij + softmin3(f.R(i - 1, j), f.R(i, j - 1), f.R(i - 1, j - 1), gamma);
    }
  }
  return f;
}

}  // namespace

double soft_dtw(const Series& a, const Series& b, const SoftDtwParams& p) {
  check_inputs(a, b, p);
  auto f = forward(a, b, p.gamma);
  const double v = f.R(f.m, f.n);
  if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "soft-DTW value overflowed");
  return v;
}

SoftDtwValueGrad soft_dtw_value_grad(const Series& a, const Series& b, const SoftDtwParams& p) {
  check_inputs(a, b, p);
  auto f = forward(a, b, p.gamma);
  const std::size_t m = f.m;
  const std::size_t n = f.n;
  const std::size_t w = n + 2;
  const double gamma = p.gamma;

  SoftDtwValueGrad out;
  out.value = f.R(m, n);
  if (!std::isfinite(out.value)) fail(ErrorCode::NonFinite, "soft-DTW value overflowed");

  for (std::size_t i = 1; i <= m; ++i) f.R(i, n + 1) = -kInf;
  for (std::size_t j = 1; j <= n; ++j) f.R(m + 1, j) = -kInf;
  f.R(m + 1, n + 1) = f.R(m, n);

  std::vector<double> e((m + 2) * w, 0.0);
  auto E = [&](std::size_t i, std::size_t j) -> double& { return e[i * w + j]; };
  E(m + 1, n + 1) = 1.0;

  for (std::size_t j = n; j >= 1; --j) {
    for (std::size_t i = m; i >= 1; --i) {
      const double rij = f.R(i, j);
      const double wa = std::exp((f.R(i + 1, j) - rij - f.c(i + 1, j)) / gamma);
      const double wb = std::exp((f.R(i, j + 1) - rij - f.c(i, j + 1)) / gamma);
      const double wc = std::exp((f.R(i + 1, j + 1) - rij - f.c(i + 1, j + 1)) / gamma);
      E(i, j) = E(i + 1, j) * wa + E(i, j + 1) * wb + E(i + 1, j + 1) * wc;
    }
  }

  out.grad = Series(m, a.dims());
  for (std::size_t i = 0; i < m; ++i) {
    auto g = out.grad.row(i);
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double eij = E(i + 1, j + 1);
      if (eij == 0.0) continue;
      const auto bj = b.row(j);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += 2.0 * eij * (ai[d] - bj[d]);
    }
  }
  if (!out.grad.all_finite()) fail(ErrorCode::NonFinite, "soft-DTW gradient is not finite");
  return out;
}

std::size_t median_length(std::span<const Series* const> members) {
  if (members.empty()) fail(ErrorCode::EmptySet, "median length of an empty set");
  std::vector<std::size_t> lens;
  lens.reserve(members.size());
  for (const auto* s : members) lens.push_back(s->frames());
  std::sort(lens.begin(), lens.end());
  const std::size_t k = lens.size();
  const double med = k % 2 ? static_cast<double>(lens[k / 2])
                           : 0.5 * static_cast<double>(lens[k / 2 - 1] + lens[k / 2]);
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(med)));
}

std::vector<double> soft_dtw_matrix(std::span<const Series* const> xs, const SoftDtwParams& p) {
  const std::size_t n = xs.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = soft_dtw(*xs[i], *xs[j], p);
  }
  return m;
}

std::size_t medoid_index(std::span<const Series* const> members, const SoftDtwParams& p) {
  if (members.empty()) fail(ErrorCode::EmptySet, "medoid of an empty set");
  std::size_t best = 0;
  double best_sum = kInf;
  for (std::size_t i = 0; i < members.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (i != j) sum += soft_dtw(*members[i], *members[j], p);
    }
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

namespace {

struct Objective {
  double value = 0.0;
  Series grad;  // averaged over members
};

Objective evaluate(const Series& x, std::span<const Series* const> members, const SoftDtwParams& p) {
  Objective o;
  o.grad = Series(x.frames(), x.dims());
  for (const auto* s : members) {
    auto vg = soft_dtw_value_grad(x, *s, p);
    o.value += vg.value;
    auto& g = o.grad.data();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += vg.grad.data()[k];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : o.grad.data()) v *= inv;
  return o;
}

}  // namespace

BarycenterResult soft_dtw_barycenter(std::span<const Series* const> members, const SoftDtwParams& p,
                                     const BarycenterOptions& opts) {
  if (members.empty()) fail(ErrorCode::EmptySet, "barycenter of an empty set");
  const std::size_t dims = members.front()->dims();
  for (const auto* s : members) {
    if (s->dims() != dims) fail(ErrorCode::DimensionMismatch, "barycenter members differ in width");
  }
  const std::size_t length = opts.length ? opts.length : median_length(members);
  if (length < 2) fail(ErrorCode::ConfigError, "barycenter length must be at least 2");

  BarycenterResult res;
  if (opts.init) {
    if (opts.init->frames() != length || opts.init->dims() != dims) {
      fail(ErrorCode::DimensionMismatch, "barycenter init has the wrong shape");
    }
    res.center = *opts.init;
  } else {
    res.center = resample_linear(*members[medoid_index(members, p)], length);
  }

  Objective cur = evaluate(res.center, members, p);
  res.objective.push_back(cur.value);
  double step = opts.step;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    bool accepted = false;
    Series trial;
    Objective next;
    for (int halvings = 0; halvings < 40; ++halvings) {
      trial = res.center;
      auto& td = trial.data();
      for (std::size_t k = 0; k < td.size(); ++k) td[k] -= step * cur.grad.data()[k];
      next = evaluate(trial, members, p);
      if (next.value <= cur.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = cur.value - next.value;
    res.center = std::move(trial);
    cur = std::move(next);
    res.objective.push_back(cur.value);
    if (gain <= opts.rel_tol * std::max(1.0, std::abs(cur.value))) break;
    step *= 1.5;
  }
  return res;
}

BarycenterResult soft_dtw_barycenter(std::span<const Series> members, const SoftDtwParams& p,
                                     const BarycenterOptions& opts) {
  std::vector<const Series*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& s : members) ptrs.push_back(&s);
  return soft_dtw_barycenter(std::span<const Series* const>(ptrs), p, opts);
}

}  // namespace agcc

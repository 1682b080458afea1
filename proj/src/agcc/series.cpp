// SPDX-License-Identifier: Apache-2.0
#include "agcc/series.hpp"

#include <cmath>

#include "agcc/error.hpp"

namespace agcc {

Series::Series(std::size_t frames, std::size_t dims, std::vector<double> data)
    : frames_(frames), dims_(dims), data_(std::move(data)) {
  if (data_.size() != frames_ * dims_) {
    fail(ErrorCode::DimensionMismatch, "series data size does not match frames*dims");
  }
}

bool Series::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Series resample_linear(const Series& s, std::size_t length) {
  if (s.empty() || length == 0) {
    fail(ErrorCode::EmptySet, "cannot resample an empty series");
  }
  Series out(length, s.dims());
  const std::size_t n = s.frames();
  for (std::size_t t = 0; t < length; ++t) {
    if (n == 1) {
      for (std::size_t d = 0; d < s.dims(); ++d) out(t, d) = s(0, d);
      continue;
    }
    const double pos = length == 1 ? 0.0
                                   : static_cast<double>(t) * static_cast<double>(n - 1) /
                                         static_cast<double>(length - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= n - 1) lo = n - 2;
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < s.dims(); ++d) {
      out(t, d) = (1.0 - frac) * s(lo, d) + frac * s(lo + 1, d);
    }
  }
  return out;
}

}  // namespace agcc

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agcc {

/// Row-major T x D matrix of doubles: one row per frame, one column per
/// feature. Used for gesture segments, acoustic frame series and centroids.
class Series {
 public:
  Series() = default;
  Series(std::size_t frames, std::size_t dims, double fill = 0.0)
      : frames_(frames), dims_(dims), data_(frames * dims, fill) {}
  Series(std::size_t frames, std::size_t dims, std::vector<double> data);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t dims() const noexcept { return dims_; }
  bool empty() const noexcept { return frames_ == 0; }

  double& operator()(std::size_t t, std::size_t d) { return data_[t * dims_ + d]; }
  double operator()(std::size_t t, std::size_t d) const { return data_[t * dims_ + d]; }

  std::span<double> row(std::size_t t) { return {data_.data() + t * dims_, dims_}; }
  std::span<const double> row(std::size_t t) const { return {data_.data() + t * dims_, dims_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Series&, const Series&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> data_;
};

// Linear-interpolation resampling along time to `length` frames. The first and
// last frames map onto each other exactly.
Series resample_linear(const Series& s, std::size_t length);

}  // namespace agcc

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace agcc {

// Numeric values are shared with the C API (agcc_status).
enum class ErrorCode : int {
  Ok = 0,
  // configuration (exit 2)
  ConfigError = 10,
  InsufficientRange = 11,
  // data (exit 3)
  DataError = 20,
  MalformedInput = 21,
  ParseError = 22,
  OverlapError = 23,
  NotNormalized = 24,
  DimensionMismatch = 25,
  EmptySet = 26,
  TooFewSamples = 27,
  ModelMismatch = 28,
  EmptyCorpus = 29,
  JoinError = 30,
  UnknownCluster = 31,
  EmptyBatch = 32,
  NoCommonClusters = 33,
  MissingClass = 34,
  IoError = 35,
  // numeric (exit 4)
  NumericError = 40,
  DegenerateFace = 41,
  NonFinite = 42,
};

const char* error_code_name(ErrorCode code) noexcept;

// Process exit code for a given error: 0 ok, 2 config, 3 data, 4 numeric.
int exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace agcc

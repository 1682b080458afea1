// SPDX-License-Identifier: Apache-2.0
#include "agcc/error.hpp"

namespace agcc {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InsufficientRange: return "InsufficientRange";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::JoinError: return "JoinError";
    case ErrorCode::UnknownCluster: return "UnknownCluster";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NoCommonClusters: return "NoCommonClusters";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NumericError: return "NumericError";
    case ErrorCode::DegenerateFace: return "DegenerateFace";
    case ErrorCode::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  const int v = static_cast<int>(code);
  if (v == 0) return 0;
  if (v < 20) return 2;
  if (v < 40) return 3;
  return 4;
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(error_code_name(code)) + ": " + message);
}

}  // namespace agcc

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gkmnc {

enum class ErrorCode {
  InvalidArgument,
  Io,
  // dataset
  MissingColumn,
  TypeMismatch,
  UnknownTargetLabel,
  KTooLarge,
  EmptyInput,
  DimensionMismatch,
  // infogain
  AllZero,
  SplitInfoZero,
  NoNominalAttributes,
  // kmeans
  KExceedsRows,
  SingleCluster,
  EmptyCentroidList,
  // optim
  NoBracketFound,
  InvalidInterval,
  // classifiers
  EmptyData,
  CholeskyFailure,
  NonConvergence,
  PartitionTooLarge,
  // pipeline
  UnseenNominalLabel,
  EmptyValidation,
  ZeroTotal,
  LeafTrainingFailed,
  FormatVersionMismatch,
  CorruptFile,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports carries a machine-readable code; the CLI
// maps codes onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gkmnc

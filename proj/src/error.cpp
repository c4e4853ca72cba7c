#include "gkmnc/error.hpp"

namespace gkmnc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::UnknownTargetLabel: return "UnknownTargetLabel";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::SplitInfoZero: return "SplitInfoZero";
    case ErrorCode::NoNominalAttributes: return "NoNominalAttributes";
    case ErrorCode::KExceedsRows: return "KExceedsRows";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::EmptyCentroidList: return "EmptyCentroidList";
    case ErrorCode::NoBracketFound: return "NoBracketFound";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::PartitionTooLarge: return "PartitionTooLarge";
    case ErrorCode::UnseenNominalLabel: return "UnseenNominalLabel";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::LeafTrainingFailed: return "LeafTrainingFailed";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
  }
  return "Unknown";
}

}  // namespace gkmnc

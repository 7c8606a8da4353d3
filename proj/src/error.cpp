#include "sfa/error.hpp"

namespace sfa {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ImageSmallerThanPatch: return "ImageSmallerThanPatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::NeedAtLeastTwoPatches: return "NeedAtLeastTwoPatches";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::TooManyComponents: return "TooManyComponents";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::TooFewContents: return "TooFewContents";
    case ErrorCode::MissingFeatures: return "MissingFeatures";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::UpstreamArtifactMissing: return "UpstreamArtifactMissing";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace sfa

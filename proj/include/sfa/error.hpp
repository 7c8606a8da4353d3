#pragma once

#include <stdexcept>
#include <string>

namespace sfa {

enum class ErrorCode {
  MissingFile,
  ParseError,
  ScoreOutOfRange,
  DuplicateImageId,
  MagicMismatch,
  VersionUnsupported,
  TruncatedPayload,
  DimensionMismatch,
  ImageSmallerThanPatch,
  BackendUnavailable,
  DimMismatch,
  EmptyFeatureSet,
  NeedAtLeastTwoPatches,
  TooFewSamples,
  TooManyComponents,
  LengthMismatch,
  DegenerateInput,
  TooFewContents,
  MissingFeatures,
  ConfigInvalid,
  UpstreamArtifactMissing,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sfa

#pragma once

#include <string>

#include <Eigen/Core>

#include "sfa/feature_file.hpp"
#include "sfa/image.hpp"
#include "sfa/patch_layout.hpp"

namespace sfa {

enum class BackendKind { FromFile, BuiltinLowLevel, ExternalModel };

constexpr int kBuiltinFeatureDim = 12;

struct ExtractorConfig {
  BackendKind backend = BackendKind::BuiltinLowLevel;
  std::string extractor_tag = "builtin-lowlevel";
  std::string layer_tag = "stats";
  int dim = kBuiltinFeatureDim;
  PatchSpec patch_spec;
  std::string external_command;  // ExternalModel only: the adapter process
};

/// Per-patch feature rows for one image, one row per grid origin in grid order.
struct FeatureSet {
  std::string image_id;
  Eigen::MatrixXd features;  // n x l
  ExtractorConfig config;

  Eigen::Index n_patches() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Deterministic 12-vector over a square luminance patch:
/// [mean, std, mean |hdiff|, mean |vdiff|, gradient energy,
///  high-frequency ratio, 6-bin gradient-magnitude histogram].
Eigen::VectorXd builtin_lowlevel_features(const Eigen::MatrixXd& patch);

FeatureSet extract(const RawImage& image, const PatchGrid& grid, const ExtractorConfig& cfg);

FeatureSet from_file(const std::string& path);

FeatureFile to_feature_file(const FeatureSet& fs);

/// Talks to an external feature extractor over its stdin/stdout.
/// Request: a JSON line {"layer_tag","width","height","channels"} followed by
/// one line of width*height*channels space-separated floats (row-major,
/// interleaved, 0-255 scale). Response: one line of space-separated floats.
class ExternalModelSession {
 public:
  explicit ExternalModelSession(const std::string& command);
  ~ExternalModelSession();

  ExternalModelSession(const ExternalModelSession&) = delete;
  ExternalModelSession& operator=(const ExternalModelSession&) = delete;

  Eigen::VectorXd extract_patch(const RawImage& image, int x0, int y0, int patch_size,
                                const std::string& layer_tag);

 private:
  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string read_buffer_;
};

BackendKind parse_backend_kind(const std::string& text);
const char* backend_kind_name(BackendKind kind);

}  // namespace sfa

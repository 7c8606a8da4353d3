#pragma once

#include <Eigen/Core>
#include <string>

namespace sfa {

using MatrixXfRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Portable per-image feature container. On disk: magic `SFAF`, u32
/// version=1, u32 header_len, UTF-8 JSON header, then n_patches*dim
/// float32 values row-major (patch-major), all little-endian.
struct FeatureFile {
  std::string image_id;
  std::string extractor_tag;
  std::string layer_tag;
  MatrixXfRM values;  // n_patches x dim

  Eigen::Index n_patches() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }

  bool operator==(const FeatureFile& other) const;
};

void write_feature_file(const FeatureFile& f, const std::string& path);
FeatureFile read_feature_file(const std::string& path);

}  // namespace sfa

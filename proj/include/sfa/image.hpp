#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/patch_layout.hpp"

namespace sfa {

/// Decoded 8-bit image, row-major, interleaved channels.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<std::uint8_t> pixels;

  ImageDims dims() const { return {width, height}; }

  std::uint8_t sample(int x, int y, int c) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
};

/// Reads binary PGM (P5) or PPM (P6), maxval 255.
RawImage read_pnm(const std::string& path);
void write_pnm(const RawImage& image, const std::string& path);

/// Rec. 601 luminance of the patch_size x patch_size block at (x0, y0),
/// values in [0, 255].
Eigen::MatrixXd luminance_patch(const RawImage& image, int x0, int y0, int patch_size);

}  // namespace sfa

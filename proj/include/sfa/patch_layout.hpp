#pragma once

#include <string>
#include <vector>

namespace sfa {

struct ImageDims {
  int width = 0;
  int height = 0;
};

struct PatchSpec {
  int patch_size = 224;
  int stride = 112;  // default: half the patch size

  static PatchSpec with_size(int patch_size) {
    return PatchSpec{patch_size, patch_size / 2};
  }
};

struct PatchOrigin {
  int x = 0;
  int y = 0;
  bool operator==(const PatchOrigin&) const = default;
};

/// Overlapping patch origins covering every pixel of the image.
/// Origins are unique and sorted row-major.
struct PatchGrid {
  PatchSpec spec;
  std::vector<PatchOrigin> origins;
};

enum class RepresentationMode { MultiPatch, Crop, Scale, Pad };

struct SourceRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  bool resample = false;      // bilinear resample to target below
  int target_width = 0;       // only meaningful when resample
  int target_height = 0;
  bool pad_to_square = false; // zero-fill the remainder up to patch_size
};

struct RepresentationPlan {
  RepresentationMode mode = RepresentationMode::MultiPatch;
  PatchSpec spec;
  std::vector<SourceRect> rects;
};

/// Per-axis origins 0, stride, 2*stride, ... with a final origin clamped to
/// extent - patch_size when the regular sequence stops short of it.
std::vector<int> axis_origins(int extent, int patch_size, int stride);

PatchGrid compute_grid(ImageDims dims, PatchSpec spec);

RepresentationPlan represent(ImageDims dims, RepresentationMode mode, PatchSpec spec);

RepresentationMode parse_representation_mode(const std::string& text);

}  // namespace sfa

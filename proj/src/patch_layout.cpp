#include "sfa/patch_layout.hpp"

#include <algorithm>
#include <string>

#include "sfa/error.hpp"

namespace sfa {

std::vector<int> axis_origins(int extent, int patch_size, int stride) {
  std::vector<int> origins;
  const int last = extent - patch_size;
  for (int o = 0; o <= last; o += stride) origins.push_back(o);
  if (origins.back() != last) origins.push_back(last);
  return origins;
}

PatchGrid compute_grid(ImageDims dims, PatchSpec spec) {
  if (spec.patch_size < 1 || spec.stride < 1 || spec.stride > spec.patch_size) {
    throw Error(ErrorCode::ConfigInvalid, "bad patch spec");
  }
  if (dims.width < spec.patch_size) {
    throw Error(ErrorCode::ImageSmallerThanPatch, "width " + std::to_string(dims.width));
  }
  if (dims.height < spec.patch_size) {
    throw Error(ErrorCode::ImageSmallerThanPatch, "height " + std::to_string(dims.height));
  }
  const auto xs = axis_origins(dims.width, spec.patch_size, spec.stride);
  const auto ys = axis_origins(dims.height, spec.patch_size, spec.stride);

  PatchGrid grid;
  grid.spec = spec;
  grid.origins.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) grid.origins.push_back({x, y});
  }
  return grid;
}

RepresentationPlan represent(ImageDims dims, RepresentationMode mode, PatchSpec spec) {
  if (dims.width < 1 || dims.height < 1) {
    throw Error(ErrorCode::ConfigInvalid, "bad image dims");
  }
  RepresentationPlan plan;
  plan.mode = mode;
  plan.spec = spec;
  const int ps = spec.patch_size;

  switch (mode) {
    case RepresentationMode::MultiPatch: {
      const PatchGrid grid = compute_grid(dims, spec);
      for (const auto& o : grid.origins) {
        plan.rects.push_back({o.x, o.y, ps, ps});
      }
      break;
    }
    case RepresentationMode::Crop: {
      if (dims.width < ps || dims.height < ps) {
        throw Error(ErrorCode::ImageSmallerThanPatch, "crop needs >= patch_size");
      }
      plan.rects.push_back({(dims.width - ps) / 2, (dims.height - ps) / 2, ps, ps});
      break;
    }
    case RepresentationMode::Scale: {
      // Whole image to patch_size x patch_size, aspect ratio ignored.
      plan.rects.push_back({0, 0, dims.width, dims.height, true, ps, ps});
      break;
    }
    case RepresentationMode::Pad: {
      // Larger dimension to patch_size, remainder zero-filled.
      SourceRect r{0, 0, dims.width, dims.height, true, 0, 0, true};
      if (dims.width >= dims.height) {
        r.target_width = ps;
        r.target_height = std::max(1, (dims.height * ps) / dims.width);
      } else {
        r.target_height = ps;
        r.target_width = std::max(1, (dims.width * ps) / dims.height);
      }
      plan.rects.push_back(r);
      break;
    }
  }
  return plan;
}

RepresentationMode parse_representation_mode(const std::string& text) {
  if (text == "multipatch") return RepresentationMode::MultiPatch;
  if (text == "crop") return RepresentationMode::Crop;
  if (text == "scale") return RepresentationMode::Scale;
  if (text == "pad") return RepresentationMode::Pad;
  throw Error(ErrorCode::ConfigInvalid, "unknown representation mode '" + text + "'");
}

}  // namespace sfa

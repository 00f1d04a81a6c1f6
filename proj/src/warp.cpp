#include "stereoforge/warp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "stereoforge/error.hpp"

namespace stereoforge {

std::size_t WarpResult::hole_count() const noexcept {
  return static_cast<std::size_t>(std::count(hole_mask.begin(), hole_mask.end(), std::uint8_t{1}));
}

WarpResult forward_warp(const RasterImage& left, const DisparityMap& disp) {
  if (left.width() != disp.width() || left.height() != disp.height())
    throw Error(ErrorCode::DimensionMismatch, "left image and disparity differ in size");
  const int w = left.width();
  const int h = left.height();
  const int ch = left.channels();

  WarpResult out;
  out.right_raw = RasterImage(w, h, ch, 0);
  out.hole_mask.assign(left.pixel_count(), 1);
  out.source_x.assign(left.pixel_count(), kNoSource);

  std::vector<float> depth_test(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(depth_test.begin(), depth_test.end(), -std::numeric_limits<float>::infinity());
    std::int32_t* src_row = out.source_x.data() + static_cast<std::size_t>(y) * w;
    // Ascending x with >= makes the larger column win ties.
    for (int x = 0; x < w; ++x) {
      if (!disp.valid(x, y)) continue;
      const float d = disp.at(x, y);
      const double target = std::floor(static_cast<double>(x) - static_cast<double>(d) + 0.5);
      if (target < 0.0 || target >= static_cast<double>(w)) continue;
      const auto t = static_cast<std::size_t>(target);
      if (d >= depth_test[t]) {
        depth_test[t] = d;
        src_row[t] = x;
      }
    }
    for (int t = 0; t < w; ++t) {
      if (src_row[t] == kNoSource) continue;
      out.hole_mask[static_cast<std::size_t>(y) * w + t] = 0;
      std::memcpy(out.right_raw.pixel(t, y).data(), left.pixel(src_row[t], y).data(),
                  static_cast<std::size_t>(ch));
    }
  }
  return out;
}

StereoSample assemble_sample(const RasterImage& left, const WarpResult& warp,
                             const RasterImage& filled_right, const DisparityMap& disp,
                             nlohmann::ordered_json provenance,
                             std::span<const std::uint8_t> unfilled) {
  if (!left.same_shape(filled_right) || !left.same_shape(warp.right_raw) ||
      left.width() != disp.width() || left.height() != disp.height() ||
      warp.hole_mask.size() != left.pixel_count())
    throw Error(ErrorCode::DimensionMismatch, "sample components differ in size");
  if (std::any_of(unfilled.begin(), unfilled.end(), [](std::uint8_t v) { return v != 0; }))
    throw Error(ErrorCode::UnfilledHoles, "right view still has unfilled pixels");
  return StereoSample{left, filled_right, disp, warp.hole_mask, std::move(provenance)};
}

}  // namespace stereoforge

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "stereoforge/disparity.hpp"
#include "stereoforge/raster.hpp"

namespace stereoforge {

inline constexpr std::int32_t kNoSource = -1;

/// Preliminary right view produced by forward warping.
struct WarpResult {
  RasterImage right_raw;
  /// 1 where no source pixel landed (disocclusion).
  PixelMask hole_mask;
  /// Column of the winning left pixel on the same row, or kNoSource.
  std::vector<std::int32_t> source_x;

  std::size_t hole_count() const noexcept;
};

/// Warps every valid left pixel leftwards by its disparity to column
/// round_half_up(x - d). On collision the larger disparity wins; equal
/// disparities resolve to the larger source column. Hole pixels in
/// right_raw are zero.
WarpResult forward_warp(const RasterImage& left, const DisparityMap& disp);

/// Training unit: the left view, its synthesized partner and the disparity
/// used to create it.
struct StereoSample {
  RasterImage left;
  RasterImage right;
  DisparityMap disparity;
  PixelMask hole_mask;
  nlohmann::ordered_json provenance;
};

/// Packages a filled right view. `unfilled` is the filler's report of pixels
/// it could not complete (empty = none); any set entry raises UnfilledHoles.
StereoSample assemble_sample(const RasterImage& left, const WarpResult& warp,
                             const RasterImage& filled_right, const DisparityMap& disp,
                             nlohmann::ordered_json provenance,
                             std::span<const std::uint8_t> unfilled = {});

}  // namespace stereoforge

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stereoforge/raster.hpp"
#include "stereoforge/rng.hpp"

namespace stereoforge {

enum class FillStrategy { RandomTexture, BackgroundExtend, External };

std::string_view to_string(FillStrategy s);
FillStrategy parse_fill_strategy(std::string_view text);

struct FillConfig {
  FillStrategy strategy = FillStrategy::BackgroundExtend;
  /// Candidate texture sources for RandomTexture.
  std::vector<std::string> background_pool;
  /// Shell command with {input}, {mask} and {output} placeholders.
  std::string external_cmd;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BackgroundCrop {
  int offset_x = 0;
  int offset_y = 0;
};

/// Brings `bg` to width x height x channels: a random window when it is large
/// enough, otherwise random-phase tiling along the short axis.
RasterImage prepare_background(const RasterImage& bg, int width, int height, int channels,
                               Rng& rng, BackgroundCrop* chosen = nullptr);

/// Copies hole pixels from the prepared background at the same coordinates.
RasterImage fill_random_texture(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                                const RasterImage& bg, Rng& rng, BackgroundCrop* chosen = nullptr);

/// Each hole takes the nearest visible pixel to its right on the same row,
/// else the nearest to its left. Rows with no visible pixel copy the nearest
/// such row (ties prefer the row above). Throws AllHoles.
RasterImage fill_background_extend(const RasterImage& right_raw,
                                   std::span<const std::uint8_t> hole_mask);

/// Hands the view and mask to an external inpainting command through PNG
/// files in a fresh directory under `workdir`, then re-imposes the visible
/// pixels onto the result.
RasterImage fill_external(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                          const FillConfig& cfg, const std::filesystem::path& workdir);

struct FillOutcome {
  RasterImage image;
  /// Random choices and strategy details, for the sample sidecar.
  nlohmann::ordered_json record;
};

/// Dispatches on cfg.strategy. RandomTexture draws the pool entry from `rng`.
FillOutcome fill_holes(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                       const FillConfig& cfg, Rng& rng, const std::filesystem::path& workdir);

}  // namespace stereoforge

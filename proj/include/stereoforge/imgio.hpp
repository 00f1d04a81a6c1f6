#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stereoforge/raster.hpp"

namespace stereoforge::imgio {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// PFM ("Pf", single channel). Rows are stored bottom-up; the sign of the
// scale token selects the byte order (negative = little-endian). Non-finite
// samples read as invalid; invalid samples are written as +inf.
FloatMap read_pfm(ByteView bytes);
Bytes write_pfm(const FloatMap& map);

// KITTI-style 16-bit gray PNG: disparity = stored / 256, stored 0 = invalid.
FloatMap read_disp_png16(ByteView bytes);
Bytes write_disp_png16(const FloatMap& map);

enum class ImageFormat { Png, Jpeg, Pfm, Unknown };

ImageFormat detect_format(ByteView bytes) noexcept;

enum class ChannelPolicy { Keep, ForceRgb };

/// Decodes PNG (any 8/16-bit layout, alpha dropped) or baseline JPEG into a
/// 1- or 3-channel raster.
RasterImage read_image(ByteView bytes, ChannelPolicy policy = ChannelPolicy::Keep);

/// Encodes `img`. Only PNG is writable; JPEG is an ingest-only format.
Bytes write_image(const RasterImage& img, ImageFormat format = ImageFormat::Png);

/// 8-bit mask PNG: 255 where mask != 0, else 0.
Bytes write_mask_png(std::span<const std::uint8_t> mask, int width, int height);
/// Inverse of write_mask_png; any nonzero gray value counts as set.
PixelMask read_mask_png(ByteView bytes, int& width, int& height);

/// Reads a disparity or depth map from PFM or 16-bit PNG, chosen by magic.
FloatMap read_float_map(ByteView bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);

/// ITU-R BT.601 luma, rounded to nearest.
RasterImage to_gray(const RasterImage& img);
RasterImage to_rgb(const RasterImage& img);

}  // namespace stereoforge::imgio

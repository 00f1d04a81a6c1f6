#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stereoforge {

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, std::uint8_t fill = 0);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  std::span<std::uint8_t> pixel(int x, int y) noexcept {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const std::uint8_t> pixel(int x, int y) const noexcept {
    return {data_.data() + offset(x, y), static_cast<std::size_t>(channels_)};
  }
  std::uint8_t& at(int x, int y, int c = 0) noexcept { return data_[offset(x, y) + c]; }
  std::uint8_t at(int x, int y, int c = 0) const noexcept { return data_[offset(x, y) + c]; }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  bool same_shape(const RasterImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
};

/// Row-major float samples with an explicit validity mask. Invalid samples
/// carry no meaning; sentinels only exist at the file boundary.
class FloatMap {
 public:
  FloatMap() = default;
  FloatMap(int width, int height, float fill = 0.0f, bool valid = true);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  float at(int x, int y) const noexcept { return values_[index(x, y)]; }
  bool valid(int x, int y) const noexcept { return valid_[index(x, y)] != 0; }

  /// Stores `v`; non-finite values are recorded as invalid.
  void set(int x, int y, float v) noexcept;
  void invalidate(int x, int y) noexcept;

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<std::uint8_t> mask() noexcept { return valid_; }
  std::span<const std::uint8_t> mask() const noexcept { return valid_; }

  std::size_t valid_count() const noexcept;
  bool same_shape(const FloatMap& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  /// Bitwise comparison of valid samples plus mask equality.
  friend bool operator==(const FloatMap& a, const FloatMap& b) noexcept;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> valid_;
};

/// Per-pixel boolean mask stored as bytes (0 / 1).
using PixelMask = std::vector<std::uint8_t>;

}  // namespace stereoforge

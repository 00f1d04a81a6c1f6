#include "stereoforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "stereoforge/error.hpp"

namespace stereoforge {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument,
                "raster dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height);
  if (channels != 1 && channels != 3)
    throw Error(ErrorCode::InvalidArgument, "channels must be 1 or 3");
  data_.assign(pixel_count() * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3)
    throw Error(ErrorCode::InvalidArgument, "channels must be 1 or 3");
  if (data_.size() != pixel_count() * channels)
    throw Error(ErrorCode::InvalidArgument, "raster data length does not match dimensions");
}

FloatMap::FloatMap(int width, int height, float fill, bool valid)
    : width_(width), height_(height) {
  check_dims(width, height);
  values_.assign(static_cast<std::size_t>(width) * height, fill);
  valid_.assign(values_.size(), (valid && std::isfinite(fill)) ? 1 : 0);
}

void FloatMap::set(int x, int y, float v) noexcept {
  const auto i = index(x, y);
  if (std::isfinite(v)) {
    values_[i] = v;
    valid_[i] = 1;
  } else {
    values_[i] = 0.0f;
    valid_[i] = 0;
  }
}

void FloatMap::invalidate(int x, int y) noexcept {
  const auto i = index(x, y);
  values_[i] = 0.0f;
  valid_[i] = 0;
}

std::size_t FloatMap::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

bool operator==(const FloatMap& a, const FloatMap& b) noexcept {
  if (!a.same_shape(b) || a.valid_ != b.valid_) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (!a.valid_[i]) continue;
    if (std::memcmp(&a.values_[i], &b.values_[i], sizeof(float)) != 0) return false;
  }
  return true;
}

}  // namespace stereoforge

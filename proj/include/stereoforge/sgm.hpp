#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "stereoforge/disparity.hpp"
#include "stereoforge/raster.hpp"

namespace stereoforge::sgm {

struct MatchParams {
  int d_max = 64;
  /// Odd, 3..7 (signatures are packed into 64 bits).
  int census_window = 5;
  int p1 = 10;
  int p2 = 120;
  /// 4 or 8 aggregation directions.
  int paths = 8;
  bool lr_check = true;
  double lr_threshold = 1.0;
  bool subpixel = false;

  void validate() const;
};

/// Per-pixel census bit signatures.
struct CensusMap {
  int width = 0;
  int height = 0;
  int window = 0;
  std::vector<std::uint64_t> bits;

  std::uint64_t at(int x, int y) const noexcept {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  int max_distance() const noexcept { return window * window - 1; }
};

/// Dense width x height x (d_max + 1) volume, disparity innermost.
template <typename T>
class Volume {
 public:
  Volume() = default;
  Volume(int width, int height, int levels, T fill = T{})
      : width_(width), height_(height), levels_(levels),
        data_(static_cast<std::size_t>(width) * height * levels, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int levels() const noexcept { return levels_; }
  int d_max() const noexcept { return levels_ - 1; }

  T* costs(int x, int y) noexcept { return data_.data() + offset(x, y); }
  const T* costs(int x, int y) const noexcept { return data_.data() + offset(x, y); }
  T& at(int x, int y, int d) noexcept { return data_[offset(x, y) + d]; }
  T at(int x, int y, int d) const noexcept { return data_[offset(x, y) + d]; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * levels_;
  }

  int width_ = 0;
  int height_ = 0;
  int levels_ = 0;
  std::vector<T> data_;
};

using CostVolume = Volume<std::uint16_t>;
using AggregatedVolume = Volume<std::uint32_t>;

/// Signature bit k is set when the k-th neighbour (row-major over the window,
/// centre skipped) is darker than the centre. Borders replicate.
CensusMap census_transform(const RasterImage& gray, int window);

/// cost(x, y, d) = Hamming(left(x, y), right(x - d, y)); columns with
/// x - d < 0 get the maximum distance.
CostVolume build_cost_volume(const CensusMap& left, const CensusMap& right, int d_max);

struct PathDirection {
  int dx;
  int dy;
};

/// Fixed summation order: four axis directions, then four diagonals.
inline constexpr PathDirection kPathDirections[8] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                                     {1, 1},  {-1, -1}, {1, -1}, {-1, 1}};

/// One directional pass of the SGM recurrence
///   L(p,d) = C(p,d) + min(L(p-r,d), L(p-r,d+-1) + p1, min_k L(p-r,k) + p2) - min_k L(p-r,k).
AggregatedVolume aggregate_path(const CostVolume& vol, PathDirection dir, std::uint32_t p1,
                                std::uint32_t p2);

/// Sum of aggregate_path over the first `paths` directions (4 or 8).
AggregatedVolume sgm_aggregate(const CostVolume& vol, std::uint32_t p1, std::uint32_t p2,
                               int paths = 8);

/// Per-pixel argmin over disparity, ties to the smaller disparity, with
/// optional parabola refinement between interior neighbours.
template <typename T>
DisparityMap wta_disparity(const Volume<T>& vol, bool subpixel = false) {
  DisparityMap out(vol.width(), vol.height());
  const int levels = vol.levels();
  for (int y = 0; y < vol.height(); ++y) {
    for (int x = 0; x < vol.width(); ++x) {
      const T* c = vol.costs(x, y);
      int best = 0;
      for (int d = 1; d < levels; ++d)
        if (c[d] < c[best]) best = d;
      double disp = best;
      if (subpixel && best > 0 && best < levels - 1) {
        const double cm = c[best - 1];
        const double c0 = c[best];
        const double cp = c[best + 1];
        const double denom = cm - 2.0 * c0 + cp;
        if (denom > 0.0) disp += std::clamp((cm - cp) / (2.0 * denom), -0.5, 0.5);
      }
      out.set(x, y, static_cast<float>(disp));
    }
  }
  return out;
}

/// Invalidates left pixels whose partner in the right-view map disagrees by
/// more than `threshold`, or whose partner lies outside the image.
DisparityMap lr_check(const DisparityMap& left_disp, const DisparityMap& right_disp,
                      double threshold);

/// Full matcher: luma, census, cost volume, aggregation, WTA and (optionally)
/// the left-right check. The right-view map comes from matching the mirrored,
/// swapped pair. Valid output lies in [0, d_max].
DisparityMap match(const RasterImage& left, const RasterImage& right, const MatchParams& params);

/// Horizontal mirror.
RasterImage mirror(const RasterImage& img);
DisparityMap mirror(const DisparityMap& map);

}  // namespace stereoforge::sgm

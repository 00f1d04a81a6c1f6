#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stereoforge/raster.hpp"
#include "stereoforge/rng.hpp"

namespace stereoforge {

/// Depth samples in any consistent unit; valid samples are finite and > 0.
class DepthMap : public FloatMap {
 public:
  DepthMap() = default;
  /// Throws InvalidArgument if a valid sample is not strictly positive.
  explicit DepthMap(FloatMap map);
};

/// Disparity in pixels; valid samples are finite and >= 0.
class DisparityMap : public FloatMap {
 public:
  DisparityMap() = default;
  DisparityMap(int width, int height, float fill = 0.0f, bool valid = true)
      : FloatMap(width, height, fill, valid) {}
  /// Throws InvalidArgument if a valid sample is negative.
  explicit DisparityMap(FloatMap map);
};

enum class ScaleMode {
  /// disparity = s * depth_max / depth; the farthest pixel gets exactly s.
  Literal,
  /// Literal result rescaled so the nearest pixel gets exactly s.
  MaxNormalized,
};

std::string_view to_string(ScaleMode mode);
ScaleMode parse_scale_mode(std::string_view text);

struct SynthConfig {
  double disp_min = 50.0;
  double disp_max = 192.0;
  ScaleMode scale_mode = ScaleMode::Literal;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws the disparity scale uniformly from [disp_min, disp_max].
double sample_scale(const SynthConfig& cfg, Rng& rng);

/// Converts depth to disparity with the per-image maximum valid depth as
/// reference. Invalid depth stays invalid. Throws NoValidPixels.
DisparityMap depth_to_disparity(const DepthMap& depth, double scale,
                                ScaleMode mode = ScaleMode::Literal);

struct Histogram {
  double bin_width = 1.0;
  /// Left edge of the first bin; bin i covers [origin + i*w, origin + (i+1)*w).
  double origin = 0.0;
  std::vector<double> fractions;

  double edge(std::size_t i) const { return origin + bin_width * static_cast<double>(i); }
};

struct DispStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Lower of the two middle order statistics for even counts.
  double median = 0.0;
  std::size_t count = 0;
  Histogram histogram;
};

inline constexpr double kHistogramClip = 512.0;

/// Statistics over valid pixels. The histogram spans the bins touched by the
/// data, clipped to [0, 512]; values beyond the clip land in the end bins.
DispStats disparity_stats(const DisparityMap& disp, double bin_width = 1.0);

/// Same as disparity_stats but over a raw sample list (all treated valid).
DispStats disparity_stats(std::vector<float> values, double bin_width = 1.0);

/// Deterministic SVG bar chart of the histogram: x = disparity, y = percent
/// of pixels, bars scaled so the tallest bin is full height.
std::string emit_histogram_svg(const DispStats& stats);

}  // namespace stereoforge

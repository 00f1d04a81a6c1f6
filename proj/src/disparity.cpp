#include "stereoforge/disparity.hpp"

#include <algorithm>
#include <cmath>

#include "stereoforge/error.hpp"

namespace stereoforge {

DepthMap::DepthMap(FloatMap map) : FloatMap(std::move(map)) {
  const auto v = values();
  const auto m = mask();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i] && !(v[i] > 0.0f))
      throw Error(ErrorCode::InvalidArgument, "depth samples must be strictly positive");
}

DisparityMap::DisparityMap(FloatMap map) : FloatMap(std::move(map)) {
  const auto v = values();
  const auto m = mask();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i] && v[i] < 0.0f)
      throw Error(ErrorCode::InvalidArgument, "disparity samples must be non-negative");
}

std::string_view to_string(ScaleMode mode) {
  return mode == ScaleMode::Literal ? "literal" : "max-normalized";
}

ScaleMode parse_scale_mode(std::string_view text) {
  if (text == "literal") return ScaleMode::Literal;
  if (text == "max-normalized" || text == "max_normalized") return ScaleMode::MaxNormalized;
  throw Error(ErrorCode::InvalidConfig, "unknown scale mode '" + std::string(text) + "'");
}

void SynthConfig::validate() const {
  if (!(disp_min > 0.0) || !(disp_min <= disp_max) || !std::isfinite(disp_max))
    throw Error(ErrorCode::InvalidConfig, "need 0 < disp_min <= disp_max");
}

double sample_scale(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.disp_min == cfg.disp_max) return cfg.disp_min;
  return std::min(rng.uniform(cfg.disp_min, cfg.disp_max), cfg.disp_max);
}

DisparityMap depth_to_disparity(const DepthMap& depth, double scale, ScaleMode mode) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw Error(ErrorCode::InvalidArgument, "disparity scale must be positive");
  double depth_max = 0.0;
  double depth_min = 0.0;
  bool any = false;
  const auto values = depth.values();
  const auto mask = depth.mask();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    const double d = values[i];
    depth_max = any ? std::max(depth_max, d) : d;
    depth_min = any ? std::min(depth_min, d) : d;
    any = true;
  }
  if (!any) throw Error(ErrorCode::NoValidPixels, "depth map has no valid pixels");

  // Max-normalized: literal disparity peaks at s*max/min; dividing that out
  // leaves s*min/depth.
  const double numerator = mode == ScaleMode::Literal ? scale * depth_max : scale * depth_min;

  DisparityMap out(depth.width(), depth.height(), 0.0f, false);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) out.set(x, y, static_cast<float>(numerator / depth.at(x, y)));
  return out;
}

namespace {

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

DispStats disparity_stats(std::vector<float> values, double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
  if (values.empty()) throw Error(ErrorCode::NoValidPixels, "no valid disparities");
  std::sort(values.begin(), values.end());
  DispStats s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  s.median = values[(values.size() - 1) / 2];
  CompensatedSum sum;
  for (float v : values) sum.add(v);
  s.mean = sum.value() / static_cast<double>(values.size());

  const double clip_hi = std::max(kHistogramClip, bin_width);
  auto bin_of = [&](double v, double origin) {
    const double c = std::clamp(v, 0.0, clip_hi);
    return static_cast<std::size_t>(std::floor((c - origin) / bin_width));
  };
  const double lo = std::clamp(s.min, 0.0, clip_hi - bin_width);
  const double origin = std::floor(lo / bin_width) * bin_width;
  const std::size_t last_bin_possible =
      static_cast<std::size_t>(std::ceil((clip_hi - origin) / bin_width)) - 1;
  const std::size_t nbins = std::min(bin_of(s.max, origin), last_bin_possible) + 1;

  std::vector<std::size_t> counts(nbins, 0);
  for (float v : values) counts[std::min(bin_of(v, origin), nbins - 1)]++;
  s.histogram.bin_width = bin_width;
  s.histogram.origin = origin;
  s.histogram.fractions.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i)
    s.histogram.fractions[i] = static_cast<double>(counts[i]) / static_cast<double>(values.size());
  return s;
}

DispStats disparity_stats(const DisparityMap& disp, double bin_width) {
  std::vector<float> values;
  values.reserve(disp.valid_count());
  const auto v = disp.values();
  const auto m = disp.mask();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i]) values.push_back(v[i]);
  return disparity_stats(std::move(values), bin_width);
}

}  // namespace stereoforge

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stereoforge/disparity.hpp"
#include "stereoforge/fill.hpp"
#include "stereoforge/raster.hpp"
#include "stereoforge/rng.hpp"
#include "stereoforge/warp.hpp"

namespace stereoforge::pipeline {

struct AugmentOptions {
  bool jitter = false;
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  bool erase = false;
  double erase_probability = 0.5;
  double erase_area_min = 0.02;
  double erase_area_max = 0.2;
};

struct PipelineConfig {
  SynthConfig synth;
  FillConfig fill;
  int min_width = 768;
  int min_height = 384;
  int crop_height = 352;
  int crop_width = 640;
  AugmentOptions augment;
  int workers = 1;
  std::uint64_t global_seed = 0;
  double hist_bin_width = 1.0;

  void validate() const;
};

inline constexpr const char* kSeedEnvVar = "STEREOFORGE_SEED";

/// Parses `key = value` lines (lines starting with '#' are comments). Relative background
/// pool paths resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies STEREOFORGE_SEED when set.
void apply_env_overrides(PipelineConfig& cfg);

struct Resized {
  RasterImage image;
  DepthMap depth;
  double factor = 1.0;
};

/// Upscales so width >= min_w and height >= min_h with the aspect ratio kept:
/// f = max(min_w / w, min_h / h, 1), output round(f w) x round(f h). The image
/// is resampled bilinearly, depth by nearest neighbour.
Resized resize_min_dims(const RasterImage& img, const DepthMap& depth, int min_w, int min_h);

/// Bilinear resize with pixel-centre alignment.
RasterImage resize_bilinear(const RasterImage& img, int width, int height);

/// One random window applied to every component; disparity values are
/// untouched. Jitter parameters are shared by both views; erasing hits the
/// right view only.
StereoSample augment_crop(const StereoSample& sample, int crop_height, int crop_width, Rng& rng,
                          const AugmentOptions& opts = {});

struct SynthResult {
  StereoSample sample;
  /// Every random choice made for the pair.
  nlohmann::ordered_json sidecar;
};

/// Resize, draw the scale, convert depth to disparity, warp, fill, assemble.
/// Errors carry the offending path.
SynthResult synth_pair(const std::filesystem::path& image_path,
                       const std::filesystem::path& depth_path, const PipelineConfig& cfg,
                       std::uint64_t sample_seed, std::string_view image_label = {},
                       std::string_view depth_label = {});

/// Writes <stem>_left.png, <stem>_right.png, <stem>_disp.pfm, <stem>_mask.png
/// and <stem>.json into `dir`.
void write_sample(const SynthResult& result, const std::filesystem::path& dir,
                  const std::string& stem);

struct BatchEntry {
  std::string image;
  std::string depth;
};

/// One pair per line, "image depth" separated by whitespace or a comma.
std::vector<BatchEntry> parse_list(std::string_view text);

struct BatchFailure {
  std::size_t index = 0;
  std::string image;
  std::string depth;
  std::string error;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t succeeded = 0;
  std::vector<BatchFailure> failures;
  std::optional<DispStats> disparity;

  bool ok() const noexcept { return failures.empty(); }
  nlohmann::ordered_json to_json(std::uint64_t global_seed) const;
};

/// Synthesizes every pair of the list with cfg.workers threads. Sample i is
/// seeded with stable_seed(global_seed, i) so output does not depend on the
/// schedule. Writes summary.json next to the samples.
BatchSummary run_batch(const std::filesystem::path& list_file, const PipelineConfig& cfg,
                       const std::filesystem::path& out_dir);

}  // namespace stereoforge::pipeline

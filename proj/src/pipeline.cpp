#include "stereoforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>

#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"

namespace stereoforge::pipeline {

namespace fs = std::filesystem;

RasterImage resize_bilinear(const RasterImage& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  RasterImage out(width, height, img.channels());
  const double sx_scale = static_cast<double>(img.width()) / width;
  const double sy_scale = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = sx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
        const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(top * (1.0 - fy) + bottom * fy));
      }
    }
  }
  return out;
}

Resized resize_min_dims(const RasterImage& img, const DepthMap& depth, int min_w, int min_h) {
  if (img.empty() || min_w < 1 || min_h < 1)
    throw Error(ErrorCode::InvalidArgument, "resize needs positive dimensions");
  if (img.width() != depth.width() || img.height() != depth.height())
    throw Error(ErrorCode::DimensionMismatch, "image and depth differ in size");
  const int w = img.width();
  const int h = img.height();
  const double f = std::max({static_cast<double>(min_w) / w, static_cast<double>(min_h) / h, 1.0});
  if (f == 1.0) return {img, depth, 1.0};
  const int out_w = static_cast<int>(std::lround(f * w));
  const int out_h = static_cast<int>(std::lround(f * h));

  FloatMap resized_depth(out_w, out_h, 0.0f, false);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(h - 1, static_cast<int>(std::floor((y + 0.5) * h / out_h)));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(w - 1, static_cast<int>(std::floor((x + 0.5) * w / out_w)));
      if (depth.valid(sx, sy)) resized_depth.set(x, y, depth.at(sx, sy));
    }
  }
  return {resize_bilinear(img, out_w, out_h), DepthMap(std::move(resized_depth)), f};
}

namespace {

RasterImage crop_image(const RasterImage& img, int x0, int y0, int w, int h) {
  RasterImage out(w, h, img.channels());
  const auto row_bytes = static_cast<std::size_t>(w) * img.channels();
  for (int y = 0; y < h; ++y)
    std::memcpy(out.pixel(0, y).data(), img.pixel(x0, y0 + y).data(), row_bytes);
  return out;
}

struct Jitter {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
};

// Pixel-wise function of the input only, so equal left/right pixels stay equal.
void apply_jitter(RasterImage& img, const Jitter& j) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto px = img.pixel(x, y);
      double v[3] = {0, 0, 0};
      for (int c = 0; c < img.channels(); ++c) v[c] = px[c] * j.brightness;
      if (img.channels() == 3) {
        const double luma = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
        for (double& c : v) c = luma + (c - luma) * j.saturation;
      }
      for (int c = 0; c < img.channels(); ++c)
        px[c] = static_cast<std::uint8_t>(std::clamp(std::lround((v[c] - 128.0) * j.contrast + 128.0), 0L, 255L));
    }
  }
}

}  // namespace

StereoSample augment_crop(const StereoSample& sample, int crop_height, int crop_width, Rng& rng,
                          const AugmentOptions& opts) {
  const int w = sample.left.width();
  const int h = sample.left.height();
  if (crop_width > w || crop_height > h)
    throw Error(ErrorCode::ImageTooSmall, "sample " + std::to_string(w) + "x" + std::to_string(h) +
                                              " is smaller than the crop " + std::to_string(crop_width) +
                                              "x" + std::to_string(crop_height));
  if (crop_width < 1 || crop_height < 1) throw Error(ErrorCode::InvalidArgument, "empty crop");
  const int x0 = rng.between(0, w - crop_width);
  const int y0 = rng.between(0, h - crop_height);

  StereoSample out;
  out.left = crop_image(sample.left, x0, y0, crop_width, crop_height);
  out.right = crop_image(sample.right, x0, y0, crop_width, crop_height);
  out.disparity = DisparityMap(crop_width, crop_height, 0.0f, false);
  out.hole_mask.resize(static_cast<std::size_t>(crop_width) * crop_height);
  for (int y = 0; y < crop_height; ++y)
    for (int x = 0; x < crop_width; ++x) {
      if (sample.disparity.valid(x0 + x, y0 + y))
        out.disparity.set(x, y, sample.disparity.at(x0 + x, y0 + y));
      out.hole_mask[static_cast<std::size_t>(y) * crop_width + x] =
          sample.hole_mask[static_cast<std::size_t>(y0 + y) * w + x0 + x];
    }
  out.provenance = sample.provenance;
  out.provenance["crop"] = {{"x", x0}, {"y", y0}, {"width", crop_width}, {"height", crop_height}};

  if (opts.jitter) {
    const Jitter j{rng.uniform(1.0 - opts.brightness, 1.0 + opts.brightness),
                   rng.uniform(1.0 - opts.contrast, 1.0 + opts.contrast),
                   rng.uniform(1.0 - opts.saturation, 1.0 + opts.saturation)};
    apply_jitter(out.left, j);
    apply_jitter(out.right, j);
    out.provenance["jitter"] = {{"brightness", j.brightness}, {"contrast", j.contrast},
                                {"saturation", j.saturation}};
  }
  if (opts.erase && rng.uniform01() < opts.erase_probability) {
    const double area = rng.uniform(opts.erase_area_min, opts.erase_area_max) * crop_width * crop_height;
    const double aspect = std::exp(rng.uniform(std::log(0.3), std::log(1.0 / 0.3)));
    const int ew = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, crop_width);
    const int eh = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, crop_height);
    const int ex = rng.between(0, crop_width - ew);
    const int ey = rng.between(0, crop_height - eh);
    std::uint8_t colour[3];
    for (auto& c : colour) c = static_cast<std::uint8_t>(rng.between(0, 255));
    for (int y = ey; y < ey + eh; ++y)
      for (int x = ex; x < ex + ew; ++x)
        for (int c = 0; c < out.right.channels(); ++c) out.right.at(x, y, c) = colour[c];
    out.provenance["erase"] = {{"x", ex}, {"y", ey}, {"width", ew}, {"height", eh}};
  }
  return out;
}

SynthResult synth_pair(const fs::path& image_path, const fs::path& depth_path,
                       const PipelineConfig& cfg, std::uint64_t sample_seed,
                       std::string_view image_label, std::string_view depth_label) {
  cfg.validate();
  RasterImage image;
  DepthMap depth;
  try {
    image = imgio::read_image(imgio::read_file(image_path));
  } catch (const Error& e) {
    rethrow_with_context(e, image_path.string());
  }
  try {
    depth = DepthMap(imgio::read_float_map(imgio::read_file(depth_path)));
  } catch (const Error& e) {
    rethrow_with_context(e, depth_path.string());
  }
  if (image.width() != depth.width() || image.height() != depth.height())
    throw Error(ErrorCode::DimensionMismatch,
                image_path.string() + " and " + depth_path.string() + " differ in size");

  const int source_w = image.width();
  const int source_h = image.height();
  Resized resized = resize_min_dims(image, depth, cfg.min_width, cfg.min_height);

  Rng rng(sample_seed);
  const double scale = sample_scale(cfg.synth, rng);
  DisparityMap disp = depth_to_disparity(resized.depth, scale, cfg.synth.scale_mode);
  const WarpResult warp = forward_warp(resized.image, disp);
  FillOutcome filled = fill_holes(warp.right_raw, warp.hole_mask, cfg.fill, rng,
                                  fs::temp_directory_path() / "stereoforge");

  nlohmann::ordered_json sidecar;
  sidecar["source_image"] = image_label.empty() ? image_path.string() : std::string(image_label);
  sidecar["s"] = scale;
  sidecar["scale_mode"] = std::string(to_string(cfg.synth.scale_mode));
  sidecar["seed"] = sample_seed;
  sidecar["depth"] = depth_label.empty() ? depth_path.string() : std::string(depth_label);
  sidecar["disp_range"] = {cfg.synth.disp_min, cfg.synth.disp_max};
  sidecar["resize"] = {{"factor", resized.factor},
                       {"source_width", source_w},
                       {"source_height", source_h},
                       {"width", resized.image.width()},
                       {"height", resized.image.height()}};
  sidecar["holes"] = warp.hole_count();
  sidecar["fill"] = filled.record;

  SynthResult result;
  result.sample = assemble_sample(resized.image, warp, filled.image, disp, sidecar);
  result.sidecar = std::move(sidecar);
  return result;
}

void write_sample(const SynthResult& result, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  const StereoSample& s = result.sample;
  imgio::write_file(dir / (stem + "_left.png"), imgio::write_image(s.left));
  imgio::write_file(dir / (stem + "_right.png"), imgio::write_image(s.right));
  imgio::write_file(dir / (stem + "_disp.pfm"), imgio::write_pfm(s.disparity));
  imgio::write_file(dir / (stem + "_mask.png"),
                    imgio::write_mask_png(s.hole_mask, s.left.width(), s.left.height()));
  const std::string meta = result.sidecar.dump(2) + "\n";
  imgio::write_file(dir / (stem + ".json"),
                    std::span(reinterpret_cast<const std::uint8_t*>(meta.data()), meta.size()));
}

std::vector<BatchEntry> parse_list(std::string_view text) {
  std::vector<BatchEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    BatchEntry e;
    if (!(fields >> e.image) || e.image.front() == '#') continue;
    std::string extra;
    if (!(fields >> e.depth) || (fields >> extra))
      throw Error(ErrorCode::InvalidArgument,
                  "list line " + std::to_string(lineno) + ": expected 'image depth'");
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::ordered_json BatchSummary::to_json(std::uint64_t global_seed) const {
  nlohmann::ordered_json j;
  j["global_seed"] = global_seed;
  j["total"] = total;
  j["succeeded"] = succeeded;
  j["failed"] = failures.size();
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures)
    j["failures"].push_back(
        {{"index", f.index}, {"image", f.image}, {"depth", f.depth}, {"error", f.error}});
  if (disparity) {
    const DispStats& d = *disparity;
    j["disparity"] = {{"count", d.count}, {"min", d.min},       {"max", d.max},
                      {"mean", d.mean},   {"median", d.median}, {"bin_width", d.histogram.bin_width}};
  } else {
    j["disparity"] = nullptr;
  }
  return j;
}

BatchSummary run_batch(const fs::path& list_file, const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto list_bytes = imgio::read_file(list_file);
  const std::vector<BatchEntry> entries =
      parse_list(std::string_view(reinterpret_cast<const char*>(list_bytes.data()), list_bytes.size()));
  const fs::path base = list_file.parent_path();
  fs::create_directories(out_dir);

  struct Slot {
    bool ok = false;
    std::string error;
    std::vector<float> disparities;
  };
  std::vector<Slot> slots(entries.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const BatchEntry& e = entries[i];
      const fs::path image = fs::path(e.image).is_absolute() ? fs::path(e.image) : base / e.image;
      const fs::path depth = fs::path(e.depth).is_absolute() ? fs::path(e.depth) : base / e.depth;
      try {
        const SynthResult r = synth_pair(image, depth, cfg, stable_seed(cfg.global_seed, i), e.image, e.depth);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%06zu", i);
        write_sample(r, out_dir, stem);
        const auto v = r.sample.disparity.values();
        const auto m = r.sample.disparity.mask();
        for (std::size_t k = 0; k < v.size(); ++k)
          if (m[k]) slots[i].disparities.push_back(v[k]);
        slots[i].ok = true;
      } catch (const std::exception& ex) {
        slots[i].error = ex.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(entries.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  BatchSummary summary;
  summary.total = entries.size();
  std::vector<float> all;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].ok) {
      ++summary.succeeded;
      all.insert(all.end(), slots[i].disparities.begin(), slots[i].disparities.end());
    } else {
      summary.failures.push_back({i, entries[i].image, entries[i].depth, slots[i].error});
    }
  }
  if (!all.empty()) summary.disparity = disparity_stats(std::move(all), cfg.hist_bin_width);
  const std::string text = summary.to_json(cfg.global_seed).dump(2) + "\n";
  imgio::write_file(out_dir / "summary.json",
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return summary;
}

}  // namespace stereoforge::pipeline

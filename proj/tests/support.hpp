#pragma once

#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "stereoforge/disparity.hpp"
#include "stereoforge/raster.hpp"
#include "stereoforge/rng.hpp"
#include "stereoforge/warp.hpp"

namespace testing {

using namespace stereoforge;

inline RasterImage random_image(int w, int h, int channels, Rng& rng) {
  RasterImage img(w, h, channels);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Noise with some low-frequency structure, so census windows are distinctive
// but not pure white noise.
inline RasterImage textured_image(int w, int h, Rng& rng) {
  RasterImage img(w, h, 3);
  const double fx = rng.uniform(0.05, 0.2);
  const double fy = rng.uniform(0.05, 0.2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double base = 60.0 * std::sin(fx * x + c) * std::cos(fy * y - c);
        const double v = 128.0 + base + rng.uniform(-60.0, 60.0);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return img;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "sf_test_XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Enumerates every (source, target) pair; a target keeps the source with the
// largest disparity, then the largest source column.
inline WarpResult warp_oracle(const RasterImage& left, const DisparityMap& disp) {
  const int w = left.width(), h = left.height(), ch = left.channels();
  WarpResult r;
  r.right_raw = RasterImage(w, h, ch);
  r.hole_mask.assign(static_cast<std::size_t>(w) * h, 1);
  r.source_x.assign(static_cast<std::size_t>(w) * h, kNoSource);
  for (int y = 0; y < h; ++y)
    for (int t = 0; t < w; ++t) {
      int best = -1;
      for (int x = 0; x < w; ++x) {
        if (!disp.valid(x, y)) continue;
        if (static_cast<int>(std::floor(x - disp.at(x, y) + 0.5)) != t) continue;
        if (best < 0 || disp.at(x, y) > disp.at(best, y) ||
            (disp.at(x, y) == disp.at(best, y) && x > best))
          best = x;
      }
      if (best < 0) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + t;
      r.hole_mask[i] = 0;
      r.source_x[i] = best;
      for (int c = 0; c < ch; ++c) r.right_raw.at(t, y, c) = left.at(best, y, c);
    }
  return r;
}

}  // namespace testing

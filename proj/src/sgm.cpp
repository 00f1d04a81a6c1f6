#include "stereoforge/sgm.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"

namespace stereoforge::sgm {

void MatchParams::validate() const {
  if (d_max < 1) throw Error(ErrorCode::InvalidArgument, "d_max must be >= 1");
  if (census_window < 3 || census_window > 7 || census_window % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "census window must be odd in [3, 7]");
  if (!(0 < p1 && p1 < p2)) throw Error(ErrorCode::InvalidArgument, "need 0 < p1 < p2");
  if (paths != 4 && paths != 8) throw Error(ErrorCode::InvalidArgument, "paths must be 4 or 8");
  if (!(lr_threshold >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lr threshold must be >= 0");
}

CensusMap census_transform(const RasterImage& gray, int window) {
  if (window < 3 || window > 7 || window % 2 == 0)
    throw Error(ErrorCode::InvalidArgument, "census window must be odd in [3, 7]");
  if (gray.channels() != 1) throw Error(ErrorCode::InvalidArgument, "census needs a gray image");
  if (gray.width() < window || gray.height() < window)
    throw Error(ErrorCode::ImageTooSmall, "image smaller than the census window");
  const int r = window / 2;
  const int w = gray.width();
  const int h = gray.height();
  CensusMap out{w, h, window, std::vector<std::uint64_t>(gray.pixel_count(), 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t centre = gray.at(x, y);
      std::uint64_t sig = 0;
      int bit = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int xx = std::clamp(x + dx, 0, w - 1);
          if (gray.at(xx, yy) < centre) sig |= std::uint64_t{1} << bit;
          ++bit;
        }
      }
      out.bits[static_cast<std::size_t>(y) * w + x] = sig;
    }
  }
  return out;
}

CostVolume build_cost_volume(const CensusMap& left, const CensusMap& right, int d_max) {
  if (left.width != right.width || left.height != right.height || left.window != right.window)
    throw Error(ErrorCode::DimensionMismatch, "census maps differ in shape");
  if (d_max < 0) throw Error(ErrorCode::InvalidArgument, "d_max must be >= 0");
  const auto max_cost = static_cast<std::uint16_t>(left.max_distance());
  CostVolume vol(left.width, left.height, d_max + 1, max_cost);
  for (int y = 0; y < left.height; ++y) {
    for (int x = 0; x < left.width; ++x) {
      const std::uint64_t l = left.at(x, y);
      std::uint16_t* c = vol.costs(x, y);
      const int reach = std::min(d_max, x);
      for (int d = 0; d <= reach; ++d)
        c[d] = static_cast<std::uint16_t>(std::popcount(l ^ right.at(x - d, y)));
    }
  }
  return vol;
}

namespace {

/// Runs one path and hands each pixel's aggregated costs to `sink`.
template <typename Sink>
void run_path(const CostVolume& vol, PathDirection dir, std::uint32_t p1, std::uint32_t p2,
              Sink&& sink) {
  const int w = vol.width();
  const int h = vol.height();
  const int levels = vol.levels();
  const std::size_t row_len = static_cast<std::size_t>(w) * levels;
  std::vector<std::uint32_t> prev_row(row_len), cur_row(row_len);

  const int y0 = dir.dy < 0 ? h - 1 : 0;
  const int y_step = dir.dy < 0 ? -1 : 1;
  const int x0 = dir.dx < 0 ? w - 1 : 0;
  const int x_step = dir.dx < 0 ? -1 : 1;

  for (int yi = 0, y = y0; yi < h; ++yi, y += y_step) {
    for (int xi = 0, x = x0; xi < w; ++xi, x += x_step) {
      const std::uint16_t* cost = vol.costs(x, y);
      std::uint32_t* out = cur_row.data() + static_cast<std::size_t>(x) * levels;
      const int px = x - dir.dx;
      const int py = y - dir.dy;
      if (px < 0 || px >= w || py < 0 || py >= h) {
        for (int d = 0; d < levels; ++d) out[d] = cost[d];
      } else {
        const std::uint32_t* prev =
            (dir.dy == 0 ? cur_row.data() : prev_row.data()) + static_cast<std::size_t>(px) * levels;
        std::uint32_t min_prev = prev[0];
        for (int d = 1; d < levels; ++d) min_prev = std::min(min_prev, prev[d]);
        const std::uint32_t jump = min_prev + p2;
        for (int d = 0; d < levels; ++d) {
          std::uint32_t best = std::min(prev[d], jump);
          if (d > 0) best = std::min(best, prev[d - 1] + p1);
          if (d + 1 < levels) best = std::min(best, prev[d + 1] + p1);
          out[d] = cost[d] + best - min_prev;
        }
      }
      sink(x, y, out);
    }
    std::swap(prev_row, cur_row);
  }
}

}  // namespace

AggregatedVolume aggregate_path(const CostVolume& vol, PathDirection dir, std::uint32_t p1,
                                std::uint32_t p2) {
  if (dir.dx < -1 || dir.dx > 1 || dir.dy < -1 || dir.dy > 1 || (dir.dx == 0 && dir.dy == 0))
    throw Error(ErrorCode::InvalidArgument, "path direction must be a unit step");
  AggregatedVolume out(vol.width(), vol.height(), vol.levels());
  const auto levels = static_cast<std::size_t>(vol.levels());
  run_path(vol, dir, p1, p2, [&](int x, int y, const std::uint32_t* l) {
    std::memcpy(out.costs(x, y), l, levels * sizeof(std::uint32_t));
  });
  return out;
}

AggregatedVolume sgm_aggregate(const CostVolume& vol, std::uint32_t p1, std::uint32_t p2, int paths) {
  if (paths != 4 && paths != 8) throw Error(ErrorCode::InvalidArgument, "paths must be 4 or 8");
  AggregatedVolume sum(vol.width(), vol.height(), vol.levels(), 0);
  const int levels = vol.levels();
  for (int i = 0; i < paths; ++i) {
    run_path(vol, kPathDirections[i], p1, p2, [&](int x, int y, const std::uint32_t* l) {
      std::uint32_t* s = sum.costs(x, y);
      for (int d = 0; d < levels; ++d) s[d] += l[d];
    });
  }
  return sum;
}

DisparityMap lr_check(const DisparityMap& left_disp, const DisparityMap& right_disp,
                      double threshold) {
  if (!left_disp.same_shape(right_disp))
    throw Error(ErrorCode::DimensionMismatch, "left and right disparity maps differ in size");
  DisparityMap out = left_disp;
  const int w = left_disp.width();
  for (int y = 0; y < left_disp.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      if (!left_disp.valid(x, y)) continue;
      const double dl = left_disp.at(x, y);
      const double xr = std::floor(static_cast<double>(x) - dl + 0.5);
      if (xr < 0.0 || xr >= w) {
        out.invalidate(x, y);
        continue;
      }
      const int xri = static_cast<int>(xr);
      if (!right_disp.valid(xri, y) || std::abs(dl - right_disp.at(xri, y)) > threshold)
        out.invalidate(x, y);
    }
  }
  return out;
}

RasterImage mirror(const RasterImage& img) {
  RasterImage out(img.width(), img.height(), img.channels());
  const auto ch = static_cast<std::size_t>(img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      std::memcpy(out.pixel(img.width() - 1 - x, y).data(), img.pixel(x, y).data(), ch);
  return out;
}

DisparityMap mirror(const DisparityMap& map) {
  DisparityMap out(map.width(), map.height(), 0.0f, false);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      if (map.valid(x, y)) out.set(map.width() - 1 - x, y, map.at(x, y));
  return out;
}

namespace {

DisparityMap match_one_view(const RasterImage& left_gray, const RasterImage& right_gray,
                            const MatchParams& params) {
  const CensusMap cl = census_transform(left_gray, params.census_window);
  const CensusMap cr = census_transform(right_gray, params.census_window);
  const CostVolume raw = build_cost_volume(cl, cr, params.d_max);
  const AggregatedVolume agg = sgm_aggregate(raw, static_cast<std::uint32_t>(params.p1),
                                             static_cast<std::uint32_t>(params.p2), params.paths);
  return wta_disparity(agg, params.subpixel);
}

}  // namespace

DisparityMap match(const RasterImage& left, const RasterImage& right, const MatchParams& params) {
  params.validate();
  if (left.width() != right.width() || left.height() != right.height())
    throw Error(ErrorCode::DimensionMismatch, "left and right images differ in size");
  const RasterImage lg = imgio::to_gray(left);
  const RasterImage rg = imgio::to_gray(right);
  DisparityMap disp = match_one_view(lg, rg, params);
  if (params.lr_check) {
    const DisparityMap right_disp = mirror(match_one_view(mirror(rg), mirror(lg), params));
    disp = lr_check(disp, right_disp, params.lr_threshold);
  }
  const auto hi = static_cast<float>(params.d_max);
  for (float& v : disp.values()) v = std::clamp(v, 0.0f, hi);
  return disp;
}

}  // namespace stereoforge::sgm

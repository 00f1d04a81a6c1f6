#include <functional>
#include <limits>

#include "doctest.h"
#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"
#include "stereoforge/metrics.hpp"
#include "stereoforge/sgm.hpp"
#include "support.hpp"

using namespace stereoforge;
using namespace stereoforge::sgm;

namespace {

RasterImage gray(int w, int h, std::vector<std::uint8_t> v) { return RasterImage(w, h, 1, std::move(v)); }

// right(x) = left(x + k); the k rightmost source columns are fresh noise.
RasterImage shift_left(const RasterImage& img, int k, Rng& rng) {
  RasterImage out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        out.at(x, y, c) = x + k < img.width() ? img.at(x + k, y, c) : static_cast<std::uint8_t>(rng.below(256));
  return out;
}

CostVolume random_volume(int w, int h, int levels, int hi, Rng& rng) {
  CostVolume v(w, h, levels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int d = 0; d < levels; ++d) v.at(x, y, d) = static_cast<std::uint16_t>(rng.below(hi + 1));
  return v;
}

// Direct recursive evaluation of the path recurrence.
std::uint64_t path_cost(const CostVolume& v, PathDirection r, std::uint32_t p1, std::uint32_t p2,
                        int x, int y, int d) {
  const int px = x - r.dx, py = y - r.dy;
  if (px < 0 || py < 0 || px >= v.width() || py >= v.height()) return v.at(x, y, d);
  std::vector<std::uint64_t> prev(v.levels());
  for (int k = 0; k < v.levels(); ++k) prev[k] = path_cost(v, r, p1, p2, px, py, k);
  const std::uint64_t m = *std::min_element(prev.begin(), prev.end());
  std::uint64_t best = std::min<std::uint64_t>(prev[d], m + p2);
  if (d > 0) best = std::min<std::uint64_t>(best, prev[d - 1] + p1);
  if (d + 1 < v.levels()) best = std::min<std::uint64_t>(best, prev[d + 1] + p1);
  return v.at(x, y, d) + best - m;
}

}  // namespace

TEST_CASE("params validation") {
  MatchParams p;
  CHECK_NOTHROW(p.validate());
  p.p1 = 200;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.census_window = 4;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.paths = 6;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.d_max = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("census: constant image") {
  const CensusMap c = census_transform(RasterImage(7, 7, 1, 90), 5);
  for (auto s : c.bits) CHECK(s == 0);
}

TEST_CASE("census: isolated pixels") {
  std::vector<std::uint8_t> v(25, 0);
  v[2 * 5 + 2] = 255;
  const CensusMap bright = census_transform(gray(5, 5, v), 3);
  CHECK(bright.at(2, 2) == 0xFF);
  CHECK(bright.at(1, 1) == 0);

  // Dark pixel on a bright field: each neighbour sets the bit pointing at it.
  std::vector<std::uint8_t> w(25, 200);
  w[2 * 5 + 2] = 10;
  const CensusMap dark = census_transform(gray(5, 5, w), 3);
  // Bit order is row-major over the window with the centre skipped.
  const int bit_for[3][3] = {{0, 1, 2}, {3, -1, 4}, {5, 6, 7}};
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      // Neighbour at (2+dx, 2+dy) sees the centre at offset (-dx, -dy).
      const int bit = bit_for[1 - dy][1 - dx];
      CHECK(dark.at(2 + dx, 2 + dy) == (std::uint64_t{1} << bit));
    }
  CHECK(dark.at(2, 2) == 0);
}

TEST_CASE("census: 3x3 ramp") {
  const CensusMap c = census_transform(gray(3, 3, {0, 10, 20, 30, 40, 50, 60, 70, 80}), 3);
  CHECK(c.at(1, 1) == 0b1111);
  CHECK(c.at(0, 0) == 0);
  CHECK(c.at(2, 2) == 0b101111);
  CHECK(c.max_distance() == 8);
}

TEST_CASE("census: errors") {
  CHECK_THROWS_AS(census_transform(RasterImage(4, 4, 1), 5), Error);
  try {
    census_transform(RasterImage(4, 4, 1), 5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImageTooSmall);
  }
  CHECK_THROWS_AS(census_transform(RasterImage(9, 9, 1), 4), Error);
}

TEST_CASE("cost volume") {
  Rng rng(1);
  const RasterImage left = testing::random_image(40, 20, 1, rng);
  const CensusMap cl = census_transform(left, 5);
  const CostVolume same = build_cost_volume(cl, cl, 8);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 40; ++x) {
      CHECK(same.at(x, y, 0) == 0);
      for (int d = x + 1; d <= 8; ++d) CHECK(same.at(x, y, d) == 24);
    }

  const int k = 5;
  const CensusMap cr = census_transform(shift_left(left, k, rng), 5);
  const CostVolume shifted = build_cost_volume(cl, cr, 8);
  int unique = 0, total = 0;
  for (int y = 2; y < 18; ++y)
    for (int x = k + 2; x < 40 - 2 - k; ++x) {
      CHECK(shifted.at(x, y, k) == 0);
      const auto* c = shifted.costs(x, y);
      if (std::count(c, c + 9, 0) == 1) {
        CHECK(std::min_element(c, c + 9) - c == k);
        ++unique;
      }
      ++total;
    }
  CHECK(unique >= 0.95 * total);
}

TEST_CASE("aggregation: hand recurrence on a 2x1x2 toy") {
  CostVolume v(2, 1, 2);
  v.at(0, 0, 0) = 1;
  v.at(0, 0, 1) = 5;
  v.at(1, 0, 0) = 4;
  v.at(1, 0, 1) = 2;
  const auto fwd = aggregate_path(v, {1, 0}, 3, 1000);
  CHECK(fwd.at(0, 0, 0) == 1);
  CHECK(fwd.at(0, 0, 1) == 5);
  CHECK(fwd.at(1, 0, 0) == 4);
  CHECK(fwd.at(1, 0, 1) == 5);
  const auto back = aggregate_path(v, {-1, 0}, 3, 1000);
  CHECK(back.at(1, 0, 0) == 4);
  CHECK(back.at(1, 0, 1) == 2);
  CHECK(back.at(0, 0, 0) == 3);
  CHECK(back.at(0, 0, 1) == 5);
}

TEST_CASE("aggregation: matches direct recursion on small volumes") {
  Rng rng(2);
  for (int trial = 0; trial < 6; ++trial) {
    const int w = 2 + static_cast<int>(rng.below(5)), h = 2 + static_cast<int>(rng.below(4));
    const CostVolume v = random_volume(w, h, 1 + static_cast<int>(rng.below(5)), 30, rng);
    const std::uint32_t p1 = static_cast<std::uint32_t>(rng.below(8)), p2 = p1 + static_cast<std::uint32_t>(rng.below(40));
    AggregatedVolume total(w, h, v.levels(), 0);
    for (const auto& dir : kPathDirections) {
      const auto agg = aggregate_path(v, dir, p1, p2);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int d = 0; d < v.levels(); ++d) {
            REQUIRE(agg.at(x, y, d) == path_cost(v, dir, p1, p2, x, y, d));
            total.at(x, y, d) += agg.at(x, y, d);
          }
    }
    CHECK(sgm_aggregate(v, p1, p2, 8) == total);
  }
}

TEST_CASE("aggregation: degenerate penalties and zero volume") {
  Rng rng(3);
  const CostVolume v = random_volume(9, 7, 6, 24, rng);
  for (const auto& dir : kPathDirections) {
    const auto agg = aggregate_path(v, dir, 0, 0);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x)
        for (int d = 0; d < 6; ++d) REQUIRE(agg.at(x, y, d) == v.at(x, y, d));
  }
  const auto sum4 = sgm_aggregate(v, 0, 0, 4);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 9; ++x)
      for (int d = 0; d < 6; ++d) REQUIRE(sum4.at(x, y, d) == 4u * v.at(x, y, d));

  const auto zero = sgm_aggregate(CostVolume(8, 8, 8, 0), 10, 120, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int d = 0; d < 8; ++d) REQUIRE(zero.at(x, y, d) == 0);
}

TEST_CASE("aggregation keeps a global zero ridge") {
  Rng rng(4);
  for (int k = 0; k < 8; ++k) {
    CostVolume v(8, 8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int d = 0; d < 8; ++d) v.at(x, y, d) = d == k ? 0 : static_cast<std::uint16_t>(20 + rng.below(5));
    const DisparityMap d = wta_disparity(sgm_aggregate(v, 10, 120, 8));
    for (float f : d.values()) CHECK(f == static_cast<float>(k));
  }
}

TEST_CASE("wta: tie rule and sub-pixel refinement") {
  CostVolume v(1, 1, 7, 9);
  v.at(0, 0, 2) = 1;
  v.at(0, 0, 5) = 1;
  CHECK(wta_disparity(v).at(0, 0) == 2.0f);

  CostVolume p(1, 1, 5, 50);
  p.at(0, 0, 1) = 10;
  p.at(0, 0, 2) = 4;
  p.at(0, 0, 3) = 6;
  // Parabola through (1,10), (2,4), (3,6): vertex at 2 + (10-6)/(2*8) = 2.25.
  CHECK(wta_disparity(p, true).at(0, 0) == doctest::Approx(2.25));
  CHECK(wta_disparity(p, false).at(0, 0) == 2.0f);
}

TEST_CASE("lr_check on hand maps") {
  DisparityMap dl(6, 1), dr(6, 1);
  const float left[6] = {0, 1, 2, 2, 2, 5};
  const float right[6] = {2, 2, 1, 9, 0, 0};
  for (int x = 0; x < 6; ++x) {
    dl.set(x, 0, left[x]);
    dr.set(x, 0, right[x]);
  }
  const DisparityMap out = lr_check(dl, dr, 1.0);
  CHECK_FALSE(out.valid(0, 0));  // dr(0) = 2
  CHECK(out.valid(1, 0));        // dr(0) = 2, |1-2| = 1 not > 1
  CHECK(out.valid(2, 0));        // dr(0) = 2
  CHECK(out.valid(3, 0));        // dr(1) = 2
  CHECK(out.valid(4, 0));        // dr(2) = 1
  CHECK_FALSE(out.valid(5, 0));  // dr(0) = 2
}

TEST_CASE("match: shifted noise") {
  Rng rng(5);
  const RasterImage left = testing::random_image(96, 48, 3, rng);
  for (int k : {0, 3, 11}) {
    const RasterImage right = shift_left(left, k, rng);
    MatchParams p;
    p.d_max = 16;
    const DisparityMap d = match(left, right, p);
    double err = 0.0;
    int n = 0, exact = 0;
    for (int y = 4; y < 44; ++y)
      for (int x = 16 + 4; x < 96 - 4 - k; ++x) {
        if (!d.valid(x, y)) continue;
        err += std::abs(d.at(x, y) - k);
        exact += d.at(x, y) == k;
        ++n;
      }
    REQUIRE(n > 0);
    CHECK(err / n < 0.5);
    CHECK(exact == n);
  }
}

TEST_CASE("match: output always within [0, d_max]") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const RasterImage a = testing::random_image(30, 20, 3, rng);
    const RasterImage b = testing::random_image(30, 20, 3, rng);
    MatchParams p;
    p.d_max = 1 + static_cast<int>(rng.below(12));
    p.subpixel = trial % 2 == 0;
    p.lr_check = trial % 3 != 0;
    const DisparityMap d = match(a, b, p);
    for (float v : d.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= static_cast<float>(p.d_max));
    }
  }
}

TEST_CASE("match: occluded band is rejected by the left-right check") {
  Rng rng(7);
  const int w = 120, h = 40;
  const RasterImage left = testing::random_image(w, h, 3, rng);
  DisparityMap disp(w, h, 4.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 50; x < 80; ++x) disp.set(x, y, 16.0f);
  // Background at 4 px, a square at 16 px: left columns [46, 50) land
  // behind the square in the right view.
  const WarpResult warp = forward_warp(left, disp);
  RasterImage right = warp.right_raw;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (warp.hole_mask[y * w + x])
        for (int c = 0; c < 3; ++c) right.at(x, y, c) = static_cast<std::uint8_t>(rng.below(256));
  MatchParams p;
  p.d_max = 24;
  const DisparityMap checked = match(left, right, p);
  p.lr_check = false;
  const DisparityMap raw = match(left, right, p);

  int band = 0, band_invalid = 0, bg = 0, bg_valid = 0;
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 38; x < 50; ++x) {
      if (x - 4 >= 34) {  // target column shadowed by the square (34..63)
        ++band;
        band_invalid += !checked.valid(x, y);
      }
    }
    for (int x = 90; x < w - 8; ++x) {
      ++bg;
      bg_valid += checked.valid(x, y) && checked.at(x, y) == 4.0f;
    }
  }
  CHECK(band_invalid >= 0.8 * band);
  CHECK(bg_valid >= 0.95 * bg);
  CHECK(raw.valid_count() == raw.size());
}

TEST_CASE("mirror is an involution") {
  Rng rng(8);
  const RasterImage img = testing::random_image(7, 3, 3, rng);
  CHECK(mirror(mirror(img)) == img);
  CHECK(mirror(img).at(0, 1, 2) == img.at(6, 1, 2));
  DisparityMap d(5, 1);
  d.set(0, 0, 3.0f);
  d.invalidate(4, 0);
  CHECK(mirror(mirror(d)) == d);
  CHECK_FALSE(mirror(d).valid(0, 0));
}

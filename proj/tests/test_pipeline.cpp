#include <stdlib.h>

#include <map>

#include "doctest.h"
#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"
#include "stereoforge/metrics.hpp"
#include "stereoforge/pipeline.hpp"
#include "support.hpp"

using namespace stereoforge;
using namespace stereoforge::pipeline;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

void write_text(const fs::path& p, const std::string& s) {
  imgio::write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::map<std::string, imgio::Bytes> read_tree(const fs::path& dir) {
  std::map<std::string, imgio::Bytes> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = imgio::read_file(e.path());
  return out;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.min_width = 48;
  cfg.min_height = 24;
  cfg.crop_width = 32;
  cfg.crop_height = 16;
  cfg.synth.disp_min = 4;
  cfg.synth.disp_max = 12;
  return cfg;
}

// Writes <stem>.png and <stem>_depth.pfm with a random image and a two-level depth.
void write_pair(const fs::path& dir, const std::string& stem, int w, int h, Rng& rng) {
  imgio::write_file(dir / (stem + ".png"), imgio::write_image(testing::textured_image(w, h, rng)));
  FloatMap depth(w, h, 10.0f);
  for (int y = h / 4; y < h / 2; ++y)
    for (int x = w / 3; x < w / 2; ++x) depth.set(x, y, 4.0f);
  imgio::write_file(dir / (stem + "_depth.pfm"), imgio::write_pfm(depth));
}

}  // namespace

TEST_CASE("config parsing") {
  testing::TempDir tmp;
  const PipelineConfig cfg = parse_config(R"(# comment
disp_min = 10
disp_max = 20
scale_mode = max-normalized
fill_strategy = random_texture
background_pool = bg/a.png, /abs/b.png
min_width = 100
min_height = 50
crop_width = 90
crop_height = 40
workers = 3
global_seed = 77
hist_bin_width = 0.5
jitter = true
)", tmp.path);
  CHECK(cfg.synth.disp_min == 10);
  CHECK(cfg.synth.scale_mode == ScaleMode::MaxNormalized);
  CHECK(cfg.fill.strategy == FillStrategy::RandomTexture);
  REQUIRE(cfg.fill.background_pool.size() == 2);
  CHECK(cfg.fill.background_pool[0] == (tmp.path / "bg/a.png").string());
  CHECK(cfg.fill.background_pool[1] == "/abs/b.png");
  CHECK(cfg.workers == 3);
  CHECK(cfg.global_seed == 77);
  CHECK(cfg.augment.jitter);

  const PipelineConfig cmd = parse_config("fill_strategy = external\nexternal_cmd = tool {input} {mask} {output} # keep\n");
  CHECK(cmd.fill.external_cmd == "tool {input} {mask} {output} # keep");

  CHECK(code_of([] { parse_config("colour = red\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("workers\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("workers = two\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("crop_width = 1000\n"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_config("fill_strategy = random_texture\n"); }) == ErrorCode::EmptyPool);
}

TEST_CASE("seed override from the environment") {
  testing::TempDir tmp;
  write_text(tmp.path / "c.cfg", "global_seed = 5\n");
  ::unsetenv(kSeedEnvVar);
  CHECK(load_config(tmp.path / "c.cfg").global_seed == 5);
  ::setenv(kSeedEnvVar, "123", 1);
  CHECK(load_config(tmp.path / "c.cfg").global_seed == 123);
  ::setenv(kSeedEnvVar, "x", 1);
  CHECK_THROWS_AS(load_config(tmp.path / "c.cfg"), Error);
  ::unsetenv(kSeedEnvVar);
}

TEST_CASE("resize rule examples") {
  Rng rng(1);
  const auto run = [&](int w, int h) {
    return resize_min_dims(testing::random_image(w, h, 3, rng), DepthMap(FloatMap(w, h, 1.0f)), 768, 384);
  };
  const Resized a = run(500, 300);
  CHECK(a.factor == doctest::Approx(1.536));
  CHECK(a.image.width() == 768);
  CHECK(a.image.height() == 461);
  CHECK(a.depth.width() == 768);
  CHECK(a.depth.height() == 461);
  for (auto [w, h] : {std::pair{800, 400}, std::pair{768, 384}}) {
    const Resized r = run(w, h);
    CHECK(r.factor == 1.0);
    CHECK(r.image.width() == w);
    CHECK(r.image.height() == h);
  }
}

TEST_CASE("resize keeps depth values and validity") {
  FloatMap d(4, 2);
  for (int x = 0; x < 4; ++x) {
    d.set(x, 0, static_cast<float>(x + 1));
    d.set(x, 1, static_cast<float>(10 * (x + 1)));
  }
  d.invalidate(3, 1);
  const Resized r = resize_min_dims(RasterImage(4, 2, 3, 50), DepthMap(d), 8, 4);
  REQUIRE(r.depth.width() == 8);
  REQUIRE(r.depth.height() == 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      CHECK(r.depth.valid(x, y) == d.valid(x / 2, y / 2));
      if (r.depth.valid(x, y)) CHECK(r.depth.at(x, y) == d.at(x / 2, y / 2));
    }
  for (auto v : r.image.data()) CHECK(v == 50);
  CHECK(code_of([] { resize_min_dims(RasterImage(4, 2, 3), DepthMap(FloatMap(3, 2, 1.0f)), 8, 4); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("resize rule on random sizes") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const int w = 16 + static_cast<int>(rng.below(1200));
    const int h = 16 + static_cast<int>(rng.below(900));
    const Resized r = resize_min_dims(RasterImage(w, h, 1), DepthMap(FloatMap(w, h, 1.0f)), 768, 384);
    CHECK(r.image.width() >= 768);
    CHECK(r.image.height() >= 384);
    CHECK(std::abs(r.image.height() - static_cast<double>(r.image.width()) * h / w) <= 1.0);
  }
}

TEST_CASE("bilinear resize of a ramp stays monotone") {
  RasterImage ramp(4, 1, 1, std::vector<std::uint8_t>{0, 80, 160, 240});
  const RasterImage up = resize_bilinear(ramp, 8, 2);
  for (int x = 1; x < 8; ++x) CHECK(up.at(x, 0) >= up.at(x - 1, 0));
  CHECK(up.at(0, 0) == 0);
  CHECK(up.at(7, 0) == 240);
}

TEST_CASE("augment_crop") {
  Rng rng(3);
  StereoSample s;
  s.left = testing::random_image(40, 30, 3, rng);
  s.right = testing::random_image(40, 30, 3, rng);
  s.disparity = DisparityMap(40, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) s.disparity.set(x, y, static_cast<float>(rng.uniform(0, 30)));
  s.disparity.invalidate(5, 5);
  s.hole_mask.assign(1200, 0);
  s.hole_mask[17] = 1;

  Rng r0(1);
  const StereoSample full = augment_crop(s, 30, 40, r0);
  CHECK(full.left == s.left);
  CHECK(full.right == s.right);
  CHECK(full.disparity == s.disparity);
  CHECK(full.hole_mask == s.hole_mask);

  Rng r1(9), r2(9);
  const StereoSample a = augment_crop(s, 16, 20, r1);
  const StereoSample b = augment_crop(s, 16, 20, r2);
  CHECK(a.left == b.left);
  CHECK(a.provenance["crop"] == b.provenance["crop"]);
  const int x0 = a.provenance["crop"]["x"], y0 = a.provenance["crop"]["y"];
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 20; ++x) {
      CHECK(a.left.at(x, y, 1) == s.left.at(x0 + x, y0 + y, 1));
      CHECK(a.right.at(x, y, 2) == s.right.at(x0 + x, y0 + y, 2));
      CHECK(a.disparity.valid(x, y) == s.disparity.valid(x0 + x, y0 + y));
      if (a.disparity.valid(x, y)) CHECK(a.disparity.at(x, y) == s.disparity.at(x0 + x, y0 + y));
      CHECK(a.hole_mask[y * 20 + x] == s.hole_mask[(y0 + y) * 40 + x0 + x]);
    }

  Rng r3(4);
  CHECK(code_of([&] { augment_crop(s, 31, 40, r3); }) == ErrorCode::ImageTooSmall);
}

TEST_CASE("augment_crop: errors restricted to the window") {
  Rng rng(4);
  StereoSample s;
  s.left = RasterImage(50, 30, 3);
  s.right = RasterImage(50, 30, 3);
  s.hole_mask.assign(1500, 0);
  s.disparity = DisparityMap(50, 30);
  DisparityMap pred(50, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 50; ++x) {
      s.disparity.set(x, y, static_cast<float>(rng.uniform(0, 40)));
      pred.set(x, y, static_cast<float>(s.disparity.at(x, y) + rng.uniform(-4, 4)));
    }
  Rng r1(8), r2(8);
  const StereoSample gt_crop = augment_crop(s, 12, 24, r1);
  StereoSample ps = s;
  ps.disparity = pred;
  const StereoSample pred_crop = augment_crop(ps, 12, 24, r2);
  const int x0 = gt_crop.provenance["crop"]["x"], y0 = gt_crop.provenance["crop"]["y"];
  DisparityMap gt_restricted(50, 30, 0.0f, false);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 24; ++x) gt_restricted.set(x0 + x, y0 + y, s.disparity.at(x0 + x, y0 + y));
  const auto a = metrics::evaluate(pred_crop.disparity, gt_crop.disparity);
  const auto b = metrics::evaluate(pred, gt_restricted);
  CHECK(a.n_valid == b.n_valid);
  CHECK(a.epe == doctest::Approx(b.epe).epsilon(1e-12));
  CHECK(a.bad == b.bad);
}

TEST_CASE("augment_crop: shared jitter, right-only erasing") {
  Rng rng(5);
  StereoSample s;
  s.left = testing::random_image(30, 20, 3, rng);
  s.right = s.left;
  s.disparity = DisparityMap(30, 20, 0.0f);
  s.hole_mask.assign(600, 0);
  AugmentOptions opts;
  opts.jitter = true;
  Rng r1(6);
  const StereoSample j = augment_crop(s, 20, 30, r1, opts);
  CHECK(j.left == j.right);
  CHECK(j.left != s.left);
  CHECK(j.provenance.contains("jitter"));

  opts.jitter = false;
  opts.erase = true;
  opts.erase_probability = 1.0;
  Rng r2(7);
  const StereoSample e = augment_crop(s, 20, 30, r2, opts);
  CHECK(e.left == s.left);
  CHECK(e.right != s.right);
  REQUIRE(e.provenance.contains("erase"));
  const int ex = e.provenance["erase"]["x"], ey = e.provenance["erase"]["y"];
  const int ew = e.provenance["erase"]["width"], eh = e.provenance["erase"]["height"];
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x)
      if (x < ex || x >= ex + ew || y < ey || y >= ey + eh) CHECK(e.right.at(x, y, 0) == s.right.at(x, y, 0));
}

TEST_CASE("synth_pair: constant depth is a pure shift") {
  testing::TempDir tmp;
  Rng rng(7);
  const RasterImage img = testing::textured_image(48, 24, rng);
  imgio::write_file(tmp.path / "img.png", imgio::write_image(img));
  imgio::write_file(tmp.path / "depth.pfm", imgio::write_pfm(FloatMap(48, 24, 3.0f)));
  PipelineConfig cfg = small_config();
  cfg.synth.disp_min = cfg.synth.disp_max = 6.0;
  const SynthResult r = synth_pair(tmp.path / "img.png", tmp.path / "depth.pfm", cfg, 1, "img.png", "depth.pfm");
  for (float v : r.sample.disparity.values()) CHECK(v == 6.0f);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 48; ++x) {
      const bool band = x >= 42;
      CHECK(r.sample.hole_mask[y * 48 + x] == (band ? 1 : 0));
      for (int c = 0; c < 3; ++c)
        CHECK(r.sample.right.at(x, y, c) == (band ? img.at(47, y, c) : img.at(x + 6, y, c)));
    }
  CHECK(r.sidecar["s"] == 6.0);
  CHECK(r.sidecar["source_image"] == "img.png");
  CHECK(r.sidecar["seed"] == 1);
  CHECK(r.sidecar["scale_mode"] == "literal");
  CHECK(r.sidecar["holes"] == 6 * 24);
  CHECK(r.sidecar["fill"]["strategy"] == "background_extend");
}

TEST_CASE("synth_pair: reproducible, resized, and the disparity ships as ground truth") {
  testing::TempDir tmp;
  Rng rng(8);
  write_pair(tmp.path, "a", 30, 20, rng);
  const PipelineConfig cfg = small_config();
  const SynthResult x = synth_pair(tmp.path / "a.png", tmp.path / "a_depth.pfm", cfg, 42);
  const SynthResult y = synth_pair(tmp.path / "a.png", tmp.path / "a_depth.pfm", cfg, 42);
  CHECK(x.sample.right == y.sample.right);
  CHECK(x.sidecar == y.sidecar);
  CHECK(x.sample.left.width() == 48);
  CHECK(x.sample.left.height() == 32);
  const double s = x.sidecar["s"];
  CHECK(s >= 4.0);
  CHECK(s <= 12.0);
  // Re-warping the shipped disparity reproduces the visible part of the right view.
  const WarpResult w = forward_warp(x.sample.left, x.sample.disparity);
  CHECK(w.hole_mask == x.sample.hole_mask);
  for (std::size_t i = 0; i < w.hole_mask.size(); ++i) {
    if (w.hole_mask[i]) continue;
    for (int c = 0; c < 3; ++c) CHECK(w.right_raw.data()[i * 3 + c] == x.sample.right.data()[i * 3 + c]);
  }
}

TEST_CASE("synth_pair: errors carry the path") {
  testing::TempDir tmp;
  Rng rng(9);
  write_pair(tmp.path, "a", 30, 20, rng);
  write_text(tmp.path / "bad.pfm", "P5\n1 1\n255\n");
  try {
    synth_pair(tmp.path / "a.png", tmp.path / "bad.pfm", small_config(), 1);
    FAIL("expected MalformedHeader");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedHeader);
    CHECK(std::string(e.what()).find("bad.pfm") != std::string::npos);
  }
  imgio::write_file(tmp.path / "small.pfm", imgio::write_pfm(FloatMap(10, 10, 1.0f)));
  CHECK(code_of([&] { synth_pair(tmp.path / "a.png", tmp.path / "small.pfm", small_config(), 1); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("external fill inside the pipeline") {
  testing::TempDir tmp;
  Rng rng(10);
  write_pair(tmp.path, "a", 48, 24, rng);
  PipelineConfig cfg = small_config();
  cfg.fill.strategy = FillStrategy::External;
  cfg.fill.external_cmd = std::string("'") + FILL_STUB + "' gray {input} {mask} {output}";
  const SynthResult r = synth_pair(tmp.path / "a.png", tmp.path / "a_depth.pfm", cfg, 3);
  for (std::size_t i = 0; i < r.sample.hole_mask.size(); ++i)
    if (r.sample.hole_mask[i]) CHECK(r.sample.right.data()[i * 3] == 128);
}

TEST_CASE("list parsing") {
  const auto l = parse_list("a.png a.pfm\n\n# skipped\nb.png,b.pfm\n  c.png   c.pfm  \n");
  REQUIRE(l.size() == 3);
  CHECK(l[1].image == "b.png");
  CHECK(l[1].depth == "b.pfm");
  CHECK(l[2].depth == "c.pfm");
  CHECK_THROWS_AS(parse_list("only-one\n"), Error);
  CHECK_THROWS_AS(parse_list("a b c\n"), Error);
}

TEST_CASE("run_batch: empty list") {
  testing::TempDir tmp;
  write_text(tmp.path / "list.txt", "");
  const BatchSummary s = run_batch(tmp.path / "list.txt", small_config(), tmp.path / "out");
  CHECK(s.total == 0);
  CHECK(s.ok());
  CHECK_FALSE(s.disparity.has_value());
  CHECK(fs::exists(tmp.path / "out" / "summary.json"));
}

TEST_CASE("run_batch: failures are collected") {
  testing::TempDir tmp;
  Rng rng(11);
  write_pair(tmp.path, "a", 40, 20, rng);
  write_pair(tmp.path, "b", 40, 20, rng);
  write_text(tmp.path / "b_depth.pfm", "Pf\n40 20\n-1.0\n");
  write_text(tmp.path / "list.txt", "a.png a_depth.pfm\nb.png b_depth.pfm\n");
  const BatchSummary s = run_batch(tmp.path / "list.txt", small_config(), tmp.path / "out");
  CHECK(s.total == 2);
  CHECK(s.succeeded == 1);
  REQUIRE(s.failures.size() == 1);
  CHECK(s.failures[0].index == 1);
  CHECK(s.failures[0].error.find("b_depth.pfm") != std::string::npos);
  CHECK(s.failures[0].error.find("TruncatedPayload") != std::string::npos);
  CHECK_FALSE(s.ok());
  CHECK(fs::exists(tmp.path / "out" / "000000_left.png"));
  CHECK_FALSE(fs::exists(tmp.path / "out" / "000001_left.png"));
  const auto summary = nlohmann::json::parse(read_tree(tmp.path / "out").at("summary.json"));
  CHECK(summary["failed"] == 1);
  CHECK(summary["disparity"]["count"] == 48 * 24);
}

TEST_CASE("run_batch: output does not depend on the worker count") {
  testing::TempDir tmp;
  Rng rng(12);
  std::string list;
  for (int i = 0; i < 6; ++i) {
    const std::string stem = "p" + std::to_string(i);
    write_pair(tmp.path, stem, 30 + 3 * i, 20, rng);
    list += stem + ".png " + stem + "_depth.pfm\n";
  }
  write_text(tmp.path / "list.txt", list);
  PipelineConfig cfg = small_config();
  cfg.global_seed = 2024;
  cfg.workers = 1;
  run_batch(tmp.path / "list.txt", cfg, tmp.path / "w1");
  cfg.workers = 3;
  run_batch(tmp.path / "list.txt", cfg, tmp.path / "w3");
  const auto a = read_tree(tmp.path / "w1");
  CHECK(a.size() == 6 * 5 + 1);
  CHECK(a == read_tree(tmp.path / "w3"));
  cfg.global_seed = 2025;
  run_batch(tmp.path / "list.txt", cfg, tmp.path / "other");
  CHECK(a != read_tree(tmp.path / "other"));
}

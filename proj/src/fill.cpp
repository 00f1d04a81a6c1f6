#include "stereoforge/fill.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>

#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"

namespace stereoforge {

namespace fs = std::filesystem;

std::string_view to_string(FillStrategy s) {
  switch (s) {
    case FillStrategy::RandomTexture: return "random_texture";
    case FillStrategy::BackgroundExtend: return "background_extend";
    case FillStrategy::External: return "external";
  }
  return "unknown";
}

FillStrategy parse_fill_strategy(std::string_view text) {
  if (text == "random_texture") return FillStrategy::RandomTexture;
  if (text == "background_extend") return FillStrategy::BackgroundExtend;
  if (text == "external") return FillStrategy::External;
  throw Error(ErrorCode::InvalidConfig, "unknown fill strategy '" + std::string(text) + "'");
}

void FillConfig::validate() const {
  if (strategy == FillStrategy::RandomTexture && background_pool.empty())
    throw Error(ErrorCode::EmptyPool, "random_texture fill needs a non-empty background pool");
  if (strategy == FillStrategy::External) {
    for (const char* key : {"{input}", "{mask}", "{output}"})
      if (external_cmd.find(key) == std::string::npos)
        throw Error(ErrorCode::InvalidConfig,
                    std::string("external fill command lacks placeholder ") + key);
  }
}

namespace {

void check_mask(const RasterImage& img, std::span<const std::uint8_t> mask) {
  if (mask.size() != img.pixel_count())
    throw Error(ErrorCode::DimensionMismatch, "hole mask does not match the image size");
}

void copy_pixel(RasterImage& dst, int dx, int dy, const RasterImage& src, int sx, int sy) {
  std::memcpy(dst.pixel(dx, dy).data(), src.pixel(sx, sy).data(),
              static_cast<std::size_t>(dst.channels()));
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
}

class TempDir {
 public:
  explicit TempDir(const fs::path& parent) {
    fs::create_directories(parent);
    std::string pattern = (parent / "fill-XXXXXX").string();
    if (!mkdtemp(pattern.data()))
      throw Error(ErrorCode::Io, "cannot create a working directory under " + parent.string());
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

RasterImage prepare_background(const RasterImage& bg, int width, int height, int channels,
                               Rng& rng, BackgroundCrop* chosen) {
  const RasterImage src = channels == 3 ? imgio::to_rgb(bg) : imgio::to_gray(bg);
  const int bw = src.width();
  const int bh = src.height();
  const int ox = bw >= width ? rng.between(0, bw - width) : rng.between(0, bw - 1);
  const int oy = bh >= height ? rng.between(0, bh - height) : rng.between(0, bh - 1);
  if (chosen) *chosen = {ox, oy};
  RasterImage out(width, height, channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) copy_pixel(out, x, y, src, (x + ox) % bw, (y + oy) % bh);
  return out;
}

RasterImage fill_random_texture(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                                const RasterImage& bg, Rng& rng, BackgroundCrop* chosen) {
  check_mask(right_raw, hole_mask);
  const RasterImage prepared =
      prepare_background(bg, right_raw.width(), right_raw.height(), right_raw.channels(), rng, chosen);
  RasterImage out = right_raw;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (hole_mask[static_cast<std::size_t>(y) * out.width() + x]) copy_pixel(out, x, y, prepared, x, y);
  return out;
}

RasterImage fill_background_extend(const RasterImage& right_raw,
                                   std::span<const std::uint8_t> hole_mask) {
  check_mask(right_raw, hole_mask);
  const int w = right_raw.width();
  const int h = right_raw.height();
  RasterImage out = right_raw;
  std::vector<char> row_has_visible(static_cast<std::size_t>(h), 0);
  std::vector<int> next_right(static_cast<std::size_t>(w));

  for (int y = 0; y < h; ++y) {
    const std::uint8_t* holes = hole_mask.data() + static_cast<std::size_t>(y) * w;
    int seen = -1;
    for (int x = w - 1; x >= 0; --x) {
      if (!holes[x]) seen = x;
      next_right[x] = seen;
    }
    if (seen < 0) continue;
    row_has_visible[y] = 1;
    int last_left = -1;
    for (int x = 0; x < w; ++x) {
      if (!holes[x]) {
        last_left = x;
        continue;
      }
      copy_pixel(out, x, y, right_raw, next_right[x] >= 0 ? next_right[x] : last_left, y);
    }
  }

  if (std::none_of(row_has_visible.begin(), row_has_visible.end(), [](char c) { return c != 0; }))
    throw Error(ErrorCode::AllHoles, "every pixel is masked");

  for (int y = 0; y < h; ++y) {
    if (row_has_visible[y]) continue;
    int source = -1;
    for (int dist = 1; source < 0; ++dist) {
      if (y - dist >= 0 && row_has_visible[y - dist])
        source = y - dist;
      else if (y + dist < h && row_has_visible[y + dist])
        source = y + dist;
    }
    for (int x = 0; x < w; ++x) copy_pixel(out, x, y, out, x, source);
  }
  return out;
}

RasterImage fill_external(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                          const FillConfig& cfg, const fs::path& workdir) {
  check_mask(right_raw, hole_mask);
  if (cfg.external_cmd.empty()) throw Error(ErrorCode::InvalidConfig, "no external fill command");
  for (const char* key : {"{input}", "{mask}", "{output}"})
    if (cfg.external_cmd.find(key) == std::string::npos)
      throw Error(ErrorCode::InvalidConfig,
                  std::string("external fill command lacks placeholder ") + key);

  TempDir dir(workdir);
  const fs::path input = dir.path() / "input.png";
  const fs::path mask = dir.path() / "mask.png";
  const fs::path output = dir.path() / "output.png";
  imgio::write_file(input, imgio::write_image(right_raw));
  imgio::write_file(mask, imgio::write_mask_png(hole_mask, right_raw.width(), right_raw.height()));

  std::string cmd = cfg.external_cmd;
  replace_all(cmd, "{input}", shell_quote(input.string()));
  replace_all(cmd, "{mask}", shell_quote(mask.string()));
  replace_all(cmd, "{output}", shell_quote(output.string()));
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error(ErrorCode::ExternalFailure,
                "external fill command failed (status " + std::to_string(status) + "): " + cmd);
  if (!fs::exists(output))
    throw Error(ErrorCode::ExternalFailure, "external fill command produced no output");

  RasterImage filled = imgio::read_image(imgio::read_file(output));
  if (filled.width() != right_raw.width() || filled.height() != right_raw.height())
    throw Error(ErrorCode::DimensionMismatch,
                "external fill returned " + std::to_string(filled.width()) + "x" +
                    std::to_string(filled.height()) + ", expected " +
                    std::to_string(right_raw.width()) + "x" + std::to_string(right_raw.height()));
  filled = right_raw.channels() == 3 ? imgio::to_rgb(filled) : imgio::to_gray(filled);

  for (int y = 0; y < filled.height(); ++y)
    for (int x = 0; x < filled.width(); ++x)
      if (!hole_mask[static_cast<std::size_t>(y) * filled.width() + x])
        copy_pixel(filled, x, y, right_raw, x, y);
  return filled;
}

FillOutcome fill_holes(const RasterImage& right_raw, std::span<const std::uint8_t> hole_mask,
                       const FillConfig& cfg, Rng& rng, const fs::path& workdir) {
  cfg.validate();
  FillOutcome out;
  out.record["strategy"] = std::string(to_string(cfg.strategy));
  switch (cfg.strategy) {
    case FillStrategy::BackgroundExtend:
      out.image = fill_background_extend(right_raw, hole_mask);
      break;
    case FillStrategy::RandomTexture: {
      const auto pick = rng.below(cfg.background_pool.size());
      const std::string& path = cfg.background_pool[pick];
      RasterImage bg;
      try {
        bg = imgio::read_image(imgio::read_file(path));
      } catch (const Error& e) {
        rethrow_with_context(e, path);
      }
      BackgroundCrop crop;
      out.image = fill_random_texture(right_raw, hole_mask, bg, rng, &crop);
      out.record["background"] = path;
      out.record["offset_x"] = crop.offset_x;
      out.record["offset_y"] = crop.offset_y;
      break;
    }
    case FillStrategy::External:
      out.image = fill_external(right_raw, hole_mask, cfg, workdir);
      out.record["command"] = cfg.external_cmd;
      break;
  }
  return out;
}

}  // namespace stereoforge

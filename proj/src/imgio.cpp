#include "stereoforge/imgio.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "stereoforge/error.hpp"

namespace stereoforge::imgio {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
constexpr int kMaxDimension = 1 << 16;

// ---------------------------------------------------------------- PFM ---

class HeaderReader {
 public:
  explicit HeaderReader(ByteView bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && out.size() < 64)
      out.push_back(static_cast<char>(bytes_[pos_++]));
    return out;
  }

  /// Consumes exactly one whitespace byte terminating the header.
  bool single_space() {
    if (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  ByteView bytes_;
  std::size_t pos_ = 0;
};

int parse_dimension(const std::string& tok) {
  if (tok.empty() || tok.size() > 9 ||
      !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw Error(ErrorCode::MalformedHeader, "bad PFM dimension token '" + tok + "'");
  const int v = std::stoi(tok);
  if (v < 1 || v > kMaxDimension)
    throw Error(ErrorCode::MalformedHeader, "PFM dimension out of range: " + tok);
  return v;
}

std::uint32_t byteswap32(std::uint32_t v) noexcept {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

float decode_float(const std::uint8_t* p, bool little_endian) noexcept {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  const bool host_little = std::endian::native == std::endian::little;
  if (host_little != little_endian) bits = byteswap32(bits);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void encode_float_le(float f, std::uint8_t* p) noexcept {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native != std::endian::little) bits = byteswap32(bits);
  std::memcpy(p, &bits, 4);
}

// ---------------------------------------------------------------- PNG ---
// libpng reports errors through longjmp. The functions holding the setjmp
// point keep only trivially destructible locals; buffers live in structs
// owned by the caller.

struct PngErrorState {
  char message[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct PngReadSource {
  ByteView bytes;
  std::size_t pos = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + count > src->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->bytes.data() + src->pos, count);
  src->pos += count;
}

struct DecodedPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  std::size_t rowbytes = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
};

enum class PngReadMode { Raw, EightBit };

bool decode_png_impl(PngReadSource* src, PngReadMode mode, DecodedPng* out, PngErrorState* err) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
  if (!png) {
    std::snprintf(err->message, sizeof(err->message), "png_create_read_struct failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(err->message, sizeof(err->message), "png_create_info_struct failed");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, src, png_read_callback);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (out->width == 0 || out->height == 0 || out->width > kMaxDimension ||
      out->height > kMaxDimension)
    png_error(png, "PNG dimensions out of range");
  if (mode == PngReadMode::EightBit) {
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  out->channels = png_get_channels(png, info);
  out->rowbytes = png_get_rowbytes(png, info);
  out->color_type = png_get_color_type(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->pixels.resize(out->rowbytes * out->height);
  out->rows.resize(out->height);
  for (png_uint_32 y = 0; y < out->height; ++y) out->rows[y] = out->pixels.data() + y * out->rowbytes;
  png_read_image(png, out->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

DecodedPng decode_png(ByteView bytes, PngReadMode mode) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
    throw Error(ErrorCode::MalformedPng, "missing PNG signature");
  PngReadSource src{bytes, 0};
  DecodedPng out;
  PngErrorState err;
  if (!decode_png_impl(&src, mode, &out, &err)) throw Error(ErrorCode::MalformedPng, err.message);
  return out;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_flush_callback(png_structp) {}

struct PngWriteJob {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  int color_type = PNG_COLOR_TYPE_GRAY;
  std::size_t rowbytes = 0;
  const std::uint8_t* pixels = nullptr;
};

bool encode_png_impl(const PngWriteJob* job, Bytes* out, PngErrorState* err) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
  if (!png) {
    std::snprintf(err->message, sizeof(err->message), "png_create_write_struct failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    std::snprintf(err->message, sizeof(err->message), "png_create_info_struct failed");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, png_write_callback, png_flush_callback);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(job->width),
               static_cast<png_uint_32>(job->height), job->bit_depth, job->color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < job->height; ++y)
    png_write_row(png, const_cast<png_bytep>(job->pixels + static_cast<std::size_t>(y) * job->rowbytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes encode_png(const PngWriteJob& job) {
  Bytes out;
  PngErrorState err;
  if (!encode_png_impl(&job, &out, &err)) throw Error(ErrorCode::Io, err.message);
  return out;
}

// --------------------------------------------------------------- JPEG ---

struct JpegErrorState {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* state = reinterpret_cast<JpegErrorState*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, state->message);
  std::longjmp(state->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

struct DecodedJpeg {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

bool decode_jpeg_impl(ByteView bytes, DecodedJpeg* out, JpegErrorState* err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err->mgr);
  err->mgr.error_exit = jpeg_error_exit;
  err->mgr.emit_message = jpeg_silent;
  if (setjmp(err->jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.num_components == 1) {
    cinfo.out_color_space = JCS_GRAYSCALE;
  } else if (cinfo.num_components == 3) {
    cinfo.out_color_space = JCS_RGB;
  } else {
    std::snprintf(err->message, sizeof(err->message), "unsupported JPEG component count %d",
                  cinfo.num_components);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_start_decompress(&cinfo);
  out->width = static_cast<int>(cinfo.output_width);
  out->height = static_cast<int>(cinfo.output_height);
  out->channels = cinfo.output_components;
  const std::size_t stride = static_cast<std::size_t>(out->width) * out->channels;
  out->pixels.resize(stride * out->height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out->pixels.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

// ------------------------------------------------------------- public ---

FloatMap read_pfm(ByteView bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != 'f' && bytes[1] != 'F'))
    throw Error(ErrorCode::MalformedHeader, "missing PFM magic");
  if (bytes[1] == 'F')
    throw Error(ErrorCode::MalformedHeader, "three-channel PFM ('PF') is not a disparity map");
  HeaderReader reader(bytes.subspan(2));
  const int width = parse_dimension(reader.token());
  const int height = parse_dimension(reader.token());
  const std::string scale_tok = reader.token();
  char* end = nullptr;
  const double scale = std::strtod(scale_tok.c_str(), &end);
  if (scale_tok.empty() || end != scale_tok.c_str() + scale_tok.size() || !std::isfinite(scale) ||
      scale == 0.0)
    throw Error(ErrorCode::MalformedHeader, "bad PFM scale token '" + scale_tok + "'");
  if (!reader.single_space()) throw Error(ErrorCode::MalformedHeader, "unterminated PFM header");

  const std::size_t payload_start = 2 + reader.pos();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - payload_start < count * 4)
    throw Error(ErrorCode::TruncatedPayload, "PFM payload holds " +
                                                 std::to_string((bytes.size() - payload_start) / 4) +
                                                 " samples, expected " + std::to_string(count));
  const bool little = scale < 0.0;
  FloatMap map(width, height);
  const std::uint8_t* p = bytes.data() + payload_start;
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x, p += 4) map.set(x, y, decode_float(p, little));
  }
  return map;
}

Bytes write_pfm(const FloatMap& map) {
  if (map.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty PFM");
  const std::string header =
      "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  const std::size_t start = out.size();
  out.resize(start + map.size() * 4);
  std::uint8_t* p = out.data() + start;
  const float inf = std::numeric_limits<float>::infinity();
  for (int row = 0; row < map.height(); ++row) {
    const int y = map.height() - 1 - row;
    for (int x = 0; x < map.width(); ++x, p += 4)
      encode_float_le(map.valid(x, y) ? map.at(x, y) : inf, p);
  }
  return out;
}

FloatMap read_disp_png16(ByteView bytes) {
  const DecodedPng png = decode_png(bytes, PngReadMode::Raw);
  if (png.bit_depth != 16)
    throw Error(ErrorCode::UnsupportedBitDepth,
                "disparity PNG must be 16-bit, got " + std::to_string(png.bit_depth) + "-bit");
  if (png.color_type != PNG_COLOR_TYPE_GRAY || png.channels != 1)
    throw Error(ErrorCode::UnsupportedFormat, "disparity PNG must be single-channel gray");
  const int w = static_cast<int>(png.width);
  const int h = static_cast<int>(png.height);
  FloatMap map(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = png.rows[y];
    for (int x = 0; x < w; ++x) {
      const unsigned stored = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
      if (stored == 0)
        map.invalidate(x, y);
      else
        map.set(x, y, static_cast<float>(stored / 256.0));
    }
  }
  return map;
}

Bytes write_disp_png16(const FloatMap& map) {
  if (map.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty PNG");
  std::vector<std::uint8_t> pixels(map.size() * 2);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      long stored = 0;
      if (map.valid(x, y))
        stored = std::clamp(std::lround(static_cast<double>(map.at(x, y)) * 256.0), 1L, 65535L);
      const std::size_t i = map.index(x, y) * 2;
      pixels[i] = static_cast<std::uint8_t>(stored >> 8);
      pixels[i + 1] = static_cast<std::uint8_t>(stored & 0xff);
    }
  }
  PngWriteJob job{map.width(), map.height(), 16, PNG_COLOR_TYPE_GRAY,
                  static_cast<std::size_t>(map.width()) * 2, pixels.data()};
  return encode_png(job);
}

ImageFormat detect_format(ByteView bytes) noexcept {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return ImageFormat::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff)
    return ImageFormat::Jpeg;
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F'))
    return ImageFormat::Pfm;
  return ImageFormat::Unknown;
}

RasterImage read_image(ByteView bytes, ChannelPolicy policy) {
  RasterImage img;
  switch (detect_format(bytes)) {
    case ImageFormat::Png: {
      DecodedPng png = decode_png(bytes, PngReadMode::EightBit);
      if (png.channels == 2) {
        // Gray + alpha survives strip_alpha only for some palettes; drop it here.
        std::vector<std::uint8_t> gray(static_cast<std::size_t>(png.width) * png.height);
        for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = png.pixels[2 * i];
        png.pixels = std::move(gray);
        png.channels = 1;
      } else if (png.channels == 4) {
        std::vector<std::uint8_t> rgb(static_cast<std::size_t>(png.width) * png.height * 3);
        for (std::size_t i = 0; i < rgb.size() / 3; ++i)
          std::memcpy(&rgb[3 * i], &png.pixels[4 * i], 3);
        png.pixels = std::move(rgb);
        png.channels = 3;
      }
      img = RasterImage(static_cast<int>(png.width), static_cast<int>(png.height), png.channels,
                        std::move(png.pixels));
      break;
    }
    case ImageFormat::Jpeg: {
      DecodedJpeg jpg;
      JpegErrorState err;
      if (!decode_jpeg_impl(bytes, &jpg, &err))
        throw Error(ErrorCode::UnsupportedFormat, std::string("JPEG decode failed: ") + err.message);
      img = RasterImage(jpg.width, jpg.height, jpg.channels, std::move(jpg.pixels));
      break;
    }
    default:
      throw Error(ErrorCode::UnsupportedFormat, "not a PNG or JPEG stream");
  }
  if (policy == ChannelPolicy::ForceRgb && img.channels() == 1) return to_rgb(img);
  return img;
}

Bytes write_image(const RasterImage& img, ImageFormat format) {
  if (format != ImageFormat::Png)
    throw Error(ErrorCode::UnsupportedFormat, "only PNG output is supported");
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot write an empty image");
  PngWriteJob job{img.width(), img.height(), 8,
                  img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                  static_cast<std::size_t>(img.width()) * img.channels(), img.data().data()};
  return encode_png(job);
}

Bytes write_mask_png(std::span<const std::uint8_t> mask, int width, int height) {
  if (mask.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorCode::DimensionMismatch, "mask length does not match dimensions");
  RasterImage img(width, height, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.data()[i] = mask[i] ? 255 : 0;
  return write_image(img);
}

PixelMask read_mask_png(ByteView bytes, int& width, int& height) {
  const RasterImage img = read_image(bytes);
  width = img.width();
  height = img.height();
  PixelMask mask(img.pixel_count());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    bool set = false;
    for (int c = 0; c < img.channels(); ++c) set = set || img.data()[i * img.channels() + c] != 0;
    mask[i] = set ? 1 : 0;
  }
  return mask;
}

FloatMap read_float_map(ByteView bytes) {
  switch (detect_format(bytes)) {
    case ImageFormat::Pfm: return read_pfm(bytes);
    case ImageFormat::Png: return read_disp_png16(bytes);
    default:
      if (bytes.size() >= 2 && bytes[0] == 'P')
        throw Error(ErrorCode::MalformedHeader, "unrecognized PFM magic");
      throw Error(ErrorCode::MalformedHeader, "neither PFM nor 16-bit PNG");
  }
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return out;
}

void write_file(const std::filesystem::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

RasterImage to_gray(const RasterImage& img) {
  if (img.channels() == 1) return img;
  RasterImage out(img.width(), img.height(), 1);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    // Fixed-point 0.299 R + 0.587 G + 0.114 B, rounded.
    const unsigned y = 299u * src[3 * i] + 587u * src[3 * i + 1] + 114u * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((y + 500u) / 1000u);
  }
  return out;
}

RasterImage to_rgb(const RasterImage& img) {
  if (img.channels() == 3) return img;
  RasterImage out(img.width(), img.height(), 3);
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  return out;
}

}  // namespace stereoforge::imgio

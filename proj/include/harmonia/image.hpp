#pragma once

// Minimal RGB raster plus PNG/JPEG decoding (libpng, libjpeg) and PNG
// encoding for generated corpora.

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "harmonia/color_space.hpp"
#include "harmonia/detail/json_util.hpp"
#include "harmonia/error.hpp"

namespace harmonia {

/// Row-major 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb8 fill = {})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw ValidationError("negative image dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  Rgb8& at(int x, int y) { return pixels_[index(x, y)]; }
  const Rgb8& at(int x, int y) const { return pixels_[index(x, y)]; }

  std::span<Rgb8> pixels() { return pixels_; }
  std::span<const Rgb8> pixels() const { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb8> pixels_;
};

/// Box-filter downscale by an integer factor (edge blocks are partial).
inline RgbImage downsample(const RgbImage& src, int factor) {
  if (factor <= 1) return src;
  const int w = (src.width() + factor - 1) / factor;
  const int h = (src.height() + factor - 1) / factor;
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      unsigned sr = 0, sg = 0, sb = 0, n = 0;
      for (int yy = y * factor; yy < std::min(src.height(), (y + 1) * factor); ++yy) {
        for (int xx = x * factor; xx < std::min(src.width(), (x + 1) * factor); ++xx) {
          const Rgb8& p = src.at(xx, yy);
          sr += p.r;
          sg += p.g;
          sb += p.b;
          ++n;
        }
      }
      out.at(x, y) = {static_cast<std::uint8_t>((sr + n / 2) / n),
                      static_cast<std::uint8_t>((sg + n / 2) / n),
                      static_cast<std::uint8_t>((sb + n / 2) / n)};
    }
  }
  return out;
}

namespace detail {

inline bool looks_like_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

inline bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

inline RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw DecodeError(std::string("png: ") + img.message);
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  static_assert(sizeof(Rgb8) == 3);
  if (!png_image_finish_read(&img, nullptr, out.pixels().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw DecodeError("png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" inline void harmonia_jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = harmonia_jpeg_error_exit;
  err.message[0] = '\0';
  std::vector<std::uint8_t> raw;
  int width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  raw.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  RgbImage out(width, height);
  std::memcpy(out.pixels().data(), raw.data(), raw.size());
  return out;
}

}  // namespace detail

/// Decodes PNG or JPEG bytes, detected by signature.
inline RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (detail::looks_like_png(bytes)) return detail::decode_png(bytes);
  if (detail::looks_like_jpeg(bytes)) return detail::decode_jpeg(bytes);
  throw DecodeError("unsupported image format (expected PNG or JPEG)");
}

inline RgbImage read_image(const std::filesystem::path& path) {
  std::string data;
  try {
    data = detail::read_text_file(path);
  } catch (const IoError&) {
    throw DecodeError("cannot read image " + path.string());
  }
  try {
    return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

inline std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels().data(), 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels().data(), 0, nullptr))
    throw IoError(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

inline void write_png(const RgbImage& image, const std::filesystem::path& path) {
  auto bytes = encode_png(image);
  detail::write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

inline bool is_image_path(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace harmonia

#include "eoren/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <string>

#include "eoren/error.hpp"
#include "eoren/io_util.hpp"

namespace eoren {
namespace {

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->offset + count > src->size) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, src->data + src->offset, count);
  src->offset += count;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t count) {
  auto* dst = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  dst->insert(dst->end(), data, data + count);
}

void flush_noop(png_structp) {}

struct DecodedRaster {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;  // 1 or 3 after alpha stripping
  int bit_depth = 0;  // 8 or 16
  std::vector<unsigned char> rows;
  std::vector<png_bytep> row_ptrs;
  char message[256] = {};
};

void record_error(png_structp png, png_const_charp msg) {
  auto* out = static_cast<DecodedRaster*>(png_get_error_ptr(png));
  std::snprintf(out->message, sizeof(out->message), "%s", msg);
  std::longjmp(png_jmpbuf(png), 1);
}

void ignore_warning(png_structp, png_const_charp) {}

// Returns false on libpng failure; the raster's message says why. All
// buffers live in the caller's frame so nothing is skipped by longjmp.
bool decode_into(MemoryReader& reader, DecodedRaster& out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out,
                                           record_error, ignore_warning);
  if (png == nullptr) {
    std::snprintf(out.message, sizeof(out.message), "libpng init failed");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(out.message, sizeof(out.message), "libpng init failed");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }

  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_error(png, "palette PNGs are not supported");
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) {
    png_set_strip_alpha(png);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (out.channels != 1 && out.channels != 3) {
    png_error(png, "unsupported channel layout");
  }
  const png_size_t stride = png_get_rowbytes(png, info);
  out.rows.resize(stride * out.height);
  out.row_ptrs.resize(out.height);
  for (png_uint_32 r = 0; r < out.height; ++r) {
    out.row_ptrs[r] = out.rows.data() + r * stride;
  }
  png_read_image(png, out.row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct EncodeState {
  char message[256] = {};
};

void record_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<EncodeState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof(st->message), "%s", msg);
  std::longjmp(png_jmpbuf(png), 1);
}

bool encode_into(const std::vector<png_bytep>& rows, png_uint_32 width,
                 png_uint_32 height, int color_type,
                 std::vector<unsigned char>& out, EncodeState& st) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st,
                                            record_write_error, ignore_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, write_to_vector, flush_noop);
  png_set_compression_level(png, 9);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

unsigned char quantize_unit(double v) noexcept {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5));
}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw DecodeError("not a PNG stream");
  }
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  DecodedRaster raster;
  if (!decode_into(reader, raster)) {
    throw DecodeError(std::string("PNG decode failed: ") + raster.message);
  }

  ImageBuffer image(static_cast<int>(raster.width),
                    static_cast<int>(raster.height), raster.channels);
  auto& px = image.pixels();
  const std::size_t samples = px.size();
  if (raster.bit_depth == 16) {
    for (std::size_t i = 0; i < samples; ++i) {
      const unsigned hi = raster.rows[2 * i];
      const unsigned lo = raster.rows[2 * i + 1];
      px[i] = static_cast<double>((hi << 8) | lo) / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      px[i] = raster.rows[i] / 255.0;
    }
  }
  return image;
}

ImageBuffer load_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_binary_file(path));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

std::vector<unsigned char> encode_png(const ImageBuffer& image,
                                      PngWriteReport* report) {
  if (image.range() != ValueRange::kUnit) {
    throw ConfigError("PNG export expects a unit-range image");
  }
  if (image.empty()) {
    throw ConfigError("cannot encode an empty image");
  }
  std::size_t clamped = 0;
  std::vector<unsigned char> bytes(image.pixels().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = image.pixels()[i];
    if (!std::isfinite(v)) {
      throw NumericalError("non-finite pixel in PNG export");
    }
    if (v < 0.0 || v > 1.0) ++clamped;
    bytes[i] = quantize_unit(v);
  }
  const std::size_t stride =
      static_cast<std::size_t>(image.width()) * image.channels();
  std::vector<png_bytep> rows(image.height());
  for (int r = 0; r < image.height(); ++r) {
    rows[r] = bytes.data() + r * stride;
  }

  std::vector<unsigned char> out;
  EncodeState st;
  const int color_type =
      image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  if (!encode_into(rows, image.width(), image.height(), color_type, out, st)) {
    throw IoError(std::string("PNG encode failed: ") + st.message);
  }
  if (report != nullptr) report->clamped = clamped;
  return out;
}

PngWriteReport save_png(const ImageBuffer& image,
                        const std::filesystem::path& path) {
  PngWriteReport report;
  write_file_atomic(path, encode_png(image, &report));
  return report;
}

}  // namespace eoren

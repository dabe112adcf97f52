#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "eoren/image.hpp"

namespace eoren {

/// Reads an 8- or 16-bit grayscale or RGB PNG (alpha is dropped) into a
/// unit-range buffer. Palette images are rejected.
ImageBuffer load_png(const std::filesystem::path& path);

/// Decodes PNG bytes held in memory.
ImageBuffer decode_png(const std::vector<unsigned char>& bytes);

struct PngWriteReport {
  /// Number of samples that were outside [0, 1] and got clamped.
  std::size_t clamped = 0;
};

/// Writes an 8-bit PNG: values are clamped to [0, 1] and quantized with
/// round-half-up. Signed-range buffers are rejected.
PngWriteReport save_png(const ImageBuffer& image,
                        const std::filesystem::path& path);

std::vector<unsigned char> encode_png(const ImageBuffer& image,
                                      PngWriteReport* report = nullptr);

/// Round-half-up quantization of a clamped unit value to 8 bits.
unsigned char quantize_unit(double v) noexcept;

}  // namespace eoren

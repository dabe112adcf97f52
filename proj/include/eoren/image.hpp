#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eoren {

enum class ValueRange {
  kUnit,    // [0, 1]
  kSigned,  // [-1, 1]
};

std::string to_string(ValueRange range);

/// Row-major raster with interleaved channels: pixel (row, col, ch) lives at
/// ((row * width) + col) * channels + ch.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels,
              ValueRange range = ValueRange::kUnit);
  ImageBuffer(int width, int height, int channels, std::vector<double> pixels,
              ValueRange range = ValueRange::kUnit);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  ValueRange range() const noexcept { return range_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return pixels_.empty(); }

  double& at(int row, int col, int ch) noexcept {
    return pixels_[index(row, col, ch)];
  }
  double at(int row, int col, int ch) const noexcept {
    return pixels_[index(row, col, ch)];
  }

  std::vector<double>& pixels() noexcept { return pixels_; }
  const std::vector<double>& pixels() const noexcept { return pixels_; }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  /// Throws ConfigError when a pixel is non-finite or outside the declared
  /// range by more than 1e-9.
  void check_range() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int row, int col, int ch) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ValueRange range_ = ValueRange::kUnit;
  std::vector<double> pixels_;
};

/// Pixel coordinates on [-1, 1]^2, endpoints included. Column c maps to
/// x = -1 + 2c/(W-1), row r maps to y = -1 + 2r/(H-1); sample b = r*W + c.
struct CoordinateGrid {
  int width = 0;
  int height = 0;
  Eigen::Matrix2Xd points;
};

CoordinateGrid make_grid(int width, int height);

ImageBuffer to_grayscale(const ImageBuffer& image);

/// Area-average downsampling. Requests larger than the source on either axis
/// are rejected.
ImageBuffer resize_box(const ImageBuffer& image, int new_width, int new_height);

ImageBuffer normalize_signed(const ImageBuffer& image);
ImageBuffer denormalize(const ImageBuffer& image);

// Channel-major views used by the networks: column b is pixel b of the grid.
Eigen::MatrixXd to_channel_matrix(const ImageBuffer& image);
ImageBuffer from_channel_matrix(const Eigen::MatrixXd& values, int width,
                                int height, ValueRange range);

}  // namespace eoren

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "eoren/image.hpp"

namespace eoren {

enum class FilterAxis { kHorizontal, kVertical };

/// 3x3 kernel applied by cross-correlation: entries[i][j] weighs the pixel at
/// offset (row + i - 1, col + j - 1).
struct DirectionalFilter {
  std::array<std::array<double, 3>, 3> entries{};
  FilterAxis axis = FilterAxis::kHorizontal;
};

DirectionalFilter sobel_x();
DirectionalFilter sobel_y();

/// Sum of absolute kernel entries.
double filter_magnitude(const DirectionalFilter& filter) noexcept;

/// Per-channel gradient samples with the same layout as ImageBuffer.
struct GradientField {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> gx;
  std::vector<double> gy;
};

/// Per-channel 3x3 cross-correlation with replicate padding; output has the
/// input's layout.
std::vector<double> convolve2d(const ImageBuffer& image,
                               const DirectionalFilter& filter);

/// Gradient with magnitude adjustment. Each filter is divided by its
/// magnitude, scaled by image size over coordinate range (W/wt for x, H/ht
/// for y) and then correlated with the image. The result is in signal units
/// per unit of the continuous coordinate.
GradientField gma(const ImageBuffer& image, const DirectionalFilter& fx,
                  const DirectionalFilter& fy, double wt = 2.0, double ht = 2.0);

/// Sobel-pair GMA with the [-1, 1] grid defaults.
GradientField gma_sobel(const ImageBuffer& image);

/// Unadjusted Sobel responses, for comparison with gma().
GradientField raw_sobel(const ImageBuffer& image);

// Channel-major views matching to_channel_matrix().
Eigen::MatrixXd gx_matrix(const GradientField& field);
Eigen::MatrixXd gy_matrix(const GradientField& field);

/// Binary layout: H, W, C as uint32 little-endian, then gx followed by gy,
/// each H*W*C float64 little-endian in (row, col, channel) order.
std::vector<unsigned char> encode_gradient_field(const GradientField& field);
GradientField decode_gradient_field(const std::vector<unsigned char>& bytes);

/// Per-pixel Euclidean norm over both axes and all channels, scaled so the
/// largest value maps to 1. A zero field yields an all-zero image.
ImageBuffer gradient_magnitude_image(const GradientField& field);

}  // namespace eoren

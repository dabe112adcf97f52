#include "eoren/image.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "eoren/error.hpp"

namespace eoren {

std::string to_string(ValueRange range) {
  return range == ValueRange::kUnit ? "unit" : "signed";
}

ImageBuffer::ImageBuffer(int width, int height, int channels, ValueRange range)
    : width_(width), height_(height), channels_(channels), range_(range) {
  if (width < 1 || height < 1) {
    throw ConfigError("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw ConfigError("image must have 1 or 3 channels, got " +
                      std::to_string(channels));
  }
  pixels_.assign(pixel_count() * static_cast<std::size_t>(channels), 0.0);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<double> pixels, ValueRange range)
    : ImageBuffer(width, height, channels, range) {
  if (pixels.size() != pixels_.size()) {
    throw ShapeError("pixel buffer has " + std::to_string(pixels.size()) +
                     " entries, expected " + std::to_string(pixels_.size()));
  }
  pixels_ = std::move(pixels);
}

void ImageBuffer::check_range() const {
  const double lo = range_ == ValueRange::kUnit ? 0.0 : -1.0;
  constexpr double kSlack = 1e-9;
  for (double v : pixels_) {
    if (!std::isfinite(v) || v < lo - kSlack || v > 1.0 + kSlack) {
      throw ConfigError("pixel value " + std::to_string(v) +
                        " outside declared " + to_string(range_) + " range");
    }
  }
}

CoordinateGrid make_grid(int width, int height) {
  if (width < 2 || height < 2) {
    throw ConfigError("coordinate grid needs at least 2 samples per axis");
  }
  CoordinateGrid grid{width, height, Eigen::Matrix2Xd(2, width * height)};
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(width, -1.0, 1.0);
  const Eigen::VectorXd ys = Eigen::VectorXd::LinSpaced(height, -1.0, 1.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      grid.points(0, r * width + c) = xs[c];
      grid.points(1, r * width + c) = ys[r];
    }
  }
  return grid;
}

ImageBuffer to_grayscale(const ImageBuffer& image) {
  if (image.channels() != 3) {
    throw ConfigError("grayscale conversion needs a 3-channel image");
  }
  ImageBuffer out(image.width(), image.height(), 1, image.range());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      out.at(r, c, 0) = 0.299 * image.at(r, c, 0) + 0.587 * image.at(r, c, 1) +
                        0.114 * image.at(r, c, 2);
    }
  }
  return out;
}

ImageBuffer resize_box(const ImageBuffer& image, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) {
    throw ConfigError("resize target must be at least 1x1");
  }
  if (new_width > image.width() || new_height > image.height()) {
    throw ConfigError("box resize only downsamples");
  }
  if (new_width == image.width() && new_height == image.height()) {
    return image;
  }

  // Each output pixel averages the source area it covers, with fractional
  // weights for partially covered source pixels.
  const double sx = static_cast<double>(image.width()) / new_width;
  const double sy = static_cast<double>(image.height()) / new_height;
  ImageBuffer out(new_width, new_height, image.channels(), image.range());
  for (int r = 0; r < new_height; ++r) {
    const double y0 = r * sy;
    const double y1 = y0 + sy;
    for (int c = 0; c < new_width; ++c) {
      const double x0 = c * sx;
      const double x1 = x0 + sx;
      for (int ch = 0; ch < image.channels(); ++ch) {
        double acc = 0.0;
        for (int yr = static_cast<int>(y0); yr < image.height() && yr < y1; ++yr) {
          const double wy = std::min<double>(yr + 1, y1) - std::max<double>(yr, y0);
          for (int xc = static_cast<int>(x0); xc < image.width() && xc < x1; ++xc) {
            const double wx =
                std::min<double>(xc + 1, x1) - std::max<double>(xc, x0);
            acc += wx * wy * image.at(yr, xc, ch);
          }
        }
        out.at(r, c, ch) = acc / (sx * sy);
      }
    }
  }
  return out;
}

ImageBuffer normalize_signed(const ImageBuffer& image) {
  if (image.range() != ValueRange::kUnit) {
    throw ConfigError("normalize_signed expects a unit-range image");
  }
  ImageBuffer out = image;
  for (double& v : out.pixels()) v = 2.0 * v - 1.0;
  return ImageBuffer(out.width(), out.height(), out.channels(),
                     std::move(out.pixels()), ValueRange::kSigned);
}

ImageBuffer denormalize(const ImageBuffer& image) {
  if (image.range() != ValueRange::kSigned) {
    throw ConfigError("denormalize expects a signed-range image");
  }
  ImageBuffer out = image;
  for (double& v : out.pixels()) v = 0.5 * (v + 1.0);
  return ImageBuffer(out.width(), out.height(), out.channels(),
                     std::move(out.pixels()), ValueRange::kUnit);
}

Eigen::MatrixXd to_channel_matrix(const ImageBuffer& image) {
  const auto n = static_cast<Eigen::Index>(image.pixel_count());
  Eigen::MatrixXd out(image.channels(), n);
  const auto& px = image.pixels();
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int ch = 0; ch < image.channels(); ++ch) {
      out(ch, b) = px[static_cast<std::size_t>(b) * image.channels() + ch];
    }
  }
  return out;
}

ImageBuffer from_channel_matrix(const Eigen::MatrixXd& values, int width,
                                int height, ValueRange range) {
  if (values.cols() != static_cast<Eigen::Index>(width) * height) {
    throw ShapeError("channel matrix has " + std::to_string(values.cols()) +
                     " samples for a " + std::to_string(width) + "x" +
                     std::to_string(height) + " image");
  }
  const int channels = static_cast<int>(values.rows());
  std::vector<double> px(static_cast<std::size_t>(values.size()));
  for (Eigen::Index b = 0; b < values.cols(); ++b) {
    for (int ch = 0; ch < channels; ++ch) {
      px[static_cast<std::size_t>(b) * channels + ch] = values(ch, b);
    }
  }
  return ImageBuffer(width, height, channels, std::move(px), range);
}

}  // namespace eoren

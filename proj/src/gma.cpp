#include "eoren/gma.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byte_stream.hpp"
#include "eoren/error.hpp"

namespace eoren {

DirectionalFilter sobel_x() {
  return {{{{-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}}},
          FilterAxis::kHorizontal};
}

DirectionalFilter sobel_y() {
  return {{{{-1.0, -2.0, -1.0}, {0.0, 0.0, 0.0}, {1.0, 2.0, 1.0}}},
          FilterAxis::kVertical};
}

double filter_magnitude(const DirectionalFilter& filter) noexcept {
  double sum = 0.0;
  for (const auto& row : filter.entries) {
    for (double v : row) sum += std::abs(v);
  }
  return sum;
}

std::vector<double> convolve2d(const ImageBuffer& image,
                               const DirectionalFilter& filter) {
  if (image.empty()) {
    throw ConfigError("cannot convolve an empty image");
  }
  const int h = image.height();
  const int w = image.width();
  const int channels = image.channels();
  std::vector<double> out(image.pixels().size(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        // Positive and negative taps summed apart: for mirrored filters
        // such as Sobel a flat neighbourhood then cancels to exactly 0.
        double pos = 0.0;
        double neg = 0.0;
        for (int i = 0; i < 3; ++i) {
          const int rr = std::clamp(r + i - 1, 0, h - 1);
          for (int j = 0; j < 3; ++j) {
            const int cc = std::clamp(c + j - 1, 0, w - 1);
            const double t = filter.entries[i][j] * image.at(rr, cc, ch);
            if (filter.entries[i][j] > 0) {
              pos += t;
            } else {
              neg += t;
            }
          }
        }
        out[(static_cast<std::size_t>(r) * w + c) * channels + ch] = pos + neg;
      }
    }
  }
  return out;
}

namespace {

DirectionalFilter scaled(DirectionalFilter f, double factor) {
  for (auto& row : f.entries) {
    for (double& v : row) v *= factor;
  }
  return f;
}

}  // namespace

GradientField gma(const ImageBuffer& image, const DirectionalFilter& fx,
                  const DirectionalFilter& fy, double wt, double ht) {
  const double mx = filter_magnitude(fx);
  const double my = filter_magnitude(fy);
  if (!(mx > 0.0) || !(my > 0.0)) {
    throw InvalidFilter("directional filter has zero magnitude");
  }
  if (!(wt > 0.0) || !(ht > 0.0)) {
    throw ConfigError("coordinate ranges must be positive");
  }

  // Normalize by magnitude, then by image size over coordinate range.
  DirectionalFilter kx = scaled(fx, 1.0 / mx);
  DirectionalFilter ky = scaled(fy, 1.0 / my);
  kx = scaled(kx, image.width() / wt);
  ky = scaled(ky, image.height() / ht);

  return {image.width(), image.height(), image.channels(), convolve2d(image, kx),
          convolve2d(image, ky)};
}

GradientField gma_sobel(const ImageBuffer& image) {
  return gma(image, sobel_x(), sobel_y());
}

GradientField raw_sobel(const ImageBuffer& image) {
  return {image.width(), image.height(), image.channels(),
          convolve2d(image, sobel_x()), convolve2d(image, sobel_y())};
}

namespace {

Eigen::MatrixXd as_channel_matrix(const std::vector<double>& data, int channels) {
  const auto n = static_cast<Eigen::Index>(data.size() / channels);
  Eigen::MatrixXd out(channels, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (int ch = 0; ch < channels; ++ch) {
      out(ch, b) = data[static_cast<std::size_t>(b) * channels + ch];
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd gx_matrix(const GradientField& field) {
  return as_channel_matrix(field.gx, field.channels);
}

Eigen::MatrixXd gy_matrix(const GradientField& field) {
  return as_channel_matrix(field.gy, field.channels);
}

std::vector<unsigned char> encode_gradient_field(const GradientField& field) {
  const std::size_t n = static_cast<std::size_t>(field.width) * field.height *
                        field.channels;
  if (field.gx.size() != n || field.gy.size() != n) {
    throw ShapeError("gradient field arrays do not match its header");
  }
  detail::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(field.height));
  w.u32(static_cast<std::uint32_t>(field.width));
  w.u32(static_cast<std::uint32_t>(field.channels));
  for (double v : field.gx) w.f64(v);
  for (double v : field.gy) w.f64(v);
  return w.take();
}

GradientField decode_gradient_field(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes, "gradient field");
  GradientField field;
  field.height = static_cast<int>(r.u32());
  field.width = static_cast<int>(r.u32());
  field.channels = static_cast<int>(r.u32());
  if (field.channels != 1 && field.channels != 3) {
    throw DecodeError("gradient field channel count must be 1 or 3");
  }
  const std::uint64_t plane = static_cast<std::uint64_t>(field.width) *
                              static_cast<std::uint64_t>(field.height);
  const std::uint64_t max_plane = r.remaining() / 16;
  if (plane > max_plane ||
      r.remaining() != plane * static_cast<std::uint64_t>(field.channels) * 16) {
    throw DecodeError("gradient field payload size does not match header");
  }
  const std::size_t n = plane * static_cast<std::size_t>(field.channels);
  field.gx.resize(n);
  field.gy.resize(n);
  for (double& v : field.gx) v = r.f64();
  for (double& v : field.gy) v = r.f64();
  return field;
}

ImageBuffer gradient_magnitude_image(const GradientField& field) {
  ImageBuffer out(field.width, field.height, 1);
  double peak = 0.0;
  const std::size_t pixels = static_cast<std::size_t>(field.width) * field.height;
  for (std::size_t p = 0; p < pixels; ++p) {
    double sq = 0.0;
    for (int ch = 0; ch < field.channels; ++ch) {
      const double gx = field.gx[p * field.channels + ch];
      const double gy = field.gy[p * field.channels + ch];
      sq += gx * gx + gy * gy;
    }
    out.pixels()[p] = std::sqrt(sq);
    peak = std::max(peak, out.pixels()[p]);
  }
  if (peak > 0.0) {
    for (double& v : out.pixels()) v /= peak;
  }
  return out;
}

}  // namespace eoren

#pragma once

// Reference implementations used only by tests. They are written as plain
// loops, independent of the Eigen code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "eoren/image.hpp"
#include "eoren/siren.hpp"

namespace oracle {

inline std::vector<double> forward_point(const eoren::SirenParams& p, double x, double y) {
  std::vector<double> a = {x, y};
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> z(layer.weight.rows());
    for (int r = 0; r < layer.weight.rows(); ++r) {
      double acc = layer.bias[r];
      for (int c = 0; c < layer.weight.cols(); ++c) acc += layer.weight(r, c) * a[c];
      z[r] = l + 1 < p.layers.size() ? std::sin(p.omega0 * acc) : acc;
    }
    a = std::move(z);
  }
  return a;
}

// Five-point central difference, (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h.
// The three-point rule at h = 1e-4 carries ~1e-7 truncation error on these
// networks, too much for small Jacobian entries.
template <typename F>
double central5(F&& f, double h) {
  return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
}

// out[c] = {d/dx, d/dy} of forward_point.
inline std::vector<std::array<double, 2>> jacobian_point(const eoren::SirenParams& p,
                                                         double x, double y, double h) {
  const std::size_t n = static_cast<std::size_t>(p.layers.back().weight.rows());
  std::vector<std::array<double, 2>> out(n);
  for (std::size_t c = 0; c < n; ++c) {
    out[c][0] = central5([&](double d) { return forward_point(p, x + d, y)[c]; }, h);
    out[c][1] = central5([&](double d) { return forward_point(p, x, y + d)[c]; }, h);
  }
  return out;
}

// Five-point central-difference gradient of `loss` with respect to every parameter,
// laid out like ParameterGradients.
inline eoren::ParameterGradients parameter_gradient(
    eoren::SirenParams p, const std::function<double(const eoren::SirenParams&)>& loss,
    double h) {
  auto g = eoren::ParameterGradients::zeros_like(p);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto probe = [&](double& v) {
      const double keep = v;
      const double d = central5(
          [&](double s) {
            v = keep + s;
            return loss(p);
          },
          h);
      v = keep;
      return d;
    };
    for (int r = 0; r < p.layers[l].weight.rows(); ++r) {
      for (int c = 0; c < p.layers[l].weight.cols(); ++c) {
        g.layers[l].weight(r, c) = probe(p.layers[l].weight(r, c));
      }
      g.layers[l].bias[r] = probe(p.layers[l].bias[r]);
    }
  }
  return g;
}

// Largest entrywise relative error; pairs where both magnitudes are below
// `floor` are compared absolutely instead.
inline double max_rel_error(const double* a, const double* b, std::size_t n,
                            double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    const double diff = std::abs(a[i] - b[i]);
    worst = std::max(worst, scale < floor ? diff : diff / scale);
  }
  return worst;
}

inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return max_rel_error(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

inline double max_rel_error(const eoren::ParameterGradients& a,
                            const eoren::ParameterGradients& b) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    worst = std::max(worst, max_rel_error(a.layers[l].weight, b.layers[l].weight));
    worst = std::max(worst, max_rel_error(Eigen::MatrixXd(a.layers[l].bias),
                                          Eigen::MatrixXd(b.layers[l].bias)));
  }
  return worst;
}

inline Eigen::Matrix2Xd random_coords(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix2Xd pts(2, n);
  for (int i = 0; i < n; ++i) {
    pts(0, i) = u(rng);
    pts(1, i) = u(rng);
  }
  return pts;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = u(rng);
  }
  return m;
}

inline eoren::ImageBuffer random_image(std::mt19937_64& rng, int w, int h, int channels) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  eoren::ImageBuffer img(w, h, channels);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

// Horizontal ramp I(r, c) = a * c in a 1-channel buffer tagged `range`.
inline eoren::ImageBuffer ramp(int w, int h, double a,
                               eoren::ValueRange range = eoren::ValueRange::kUnit) {
  eoren::ImageBuffer img(w, h, 1, range);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img.at(r, c, 0) = a * c;
  }
  return img;
}

// Squared-error losses written out term by term.
inline double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

}  // namespace oracle

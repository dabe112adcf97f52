#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eoren/image.hpp"

namespace eoren {

/// 10 log10(peak^2 / MSE). Identical inputs give +infinity.
double psnr(std::span<const double> a, std::span<const double> b, double peak = 1.0);
double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean structural similarity over all valid window positions (no padding),
/// averaged over channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options = {});
double ssim_channel(const ImageBuffer& a, const ImageBuffer& b, int channel,
                    const SsimOptions& options = {});

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;

  std::size_t total() const noexcept;
  /// "bin_left,bin_right,count" rows.
  std::string to_csv() const;
};

/// Uniform bins over [lo, hi]; right-open except the last. Values outside
/// the range land in the end bins.
Histogram histogram(std::span<const double> values, int bins, double lo, double hi);

/// Histogram over [min, max] of the values. A constant or empty input gets
/// the range [v - 0.5, v + 0.5] (or [0, 1]).
Histogram histogram_auto(std::span<const double> values, int bins);

struct ChannelMetrics {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct NamedHistogram {
  std::string name;
  Histogram histogram;
};

struct MetricsReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::vector<ChannelMetrics> per_channel;
  std::vector<NamedHistogram> histograms;

  /// Infinite PSNR is written as the string "inf".
  nlohmann::ordered_json to_json() const;
};

/// PSNR and SSIM of `pred` against `ref`, overall and per channel. Both must
/// be unit-range with identical shape.
MetricsReport evaluate(const ImageBuffer& pred, const ImageBuffer& ref);

nlohmann::ordered_json psnr_to_json(double psnr_db);

}  // namespace eoren

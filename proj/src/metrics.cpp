#include "eoren/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "eoren/error.hpp"
#include "eoren/format.hpp"

namespace eoren {

double psnr(std::span<const double> a, std::span<const double> b, double peak) {
  if (a.size() != b.size()) {
    throw ShapeError("psnr: inputs have different sizes");
  }
  if (a.empty()) {
    throw ShapeError("psnr: empty input");
  }
  if (!(peak > 0.0)) {
    throw ConfigError("psnr: peak must be positive");
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  if (!a.same_shape(b)) {
    throw ShapeError("psnr: image dimensions differ");
  }
  return psnr(a.pixels(), b.pixels(), peak);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double center = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    w[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int width, int height,
                                 const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  const int ow = width - k + 1;
  const int oh = height - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[i] * plane[static_cast<std::size_t>(r) * width + c + i];
      rows[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += w[i] * rows[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

std::vector<double> channel_plane(const ImageBuffer& img, int channel) {
  std::vector<double> plane(img.pixel_count());
  for (std::size_t p = 0; p < plane.size(); ++p) {
    plane[p] = img.pixels()[p * img.channels() + channel];
  }
  return plane;
}

}  // namespace

double ssim_channel(const ImageBuffer& a, const ImageBuffer& b, int channel,
                    const SsimOptions& opt) {
  if (!a.same_shape(b)) {
    throw ShapeError("ssim: image dimensions differ");
  }
  if (channel < 0 || channel >= a.channels()) {
    throw ConfigError("ssim: channel out of range");
  }
  if (opt.window < 1 || !(opt.sigma > 0.0) || !(opt.peak > 0.0)) {
    throw ConfigError("ssim: invalid window options");
  }
  if (a.width() < opt.window || a.height() < opt.window) {
    throw ConfigError("ssim: image smaller than the " + std::to_string(opt.window) +
                      "-pixel window");
  }
  const auto w = gaussian_window(opt.window, opt.sigma);
  const auto pa = channel_plane(a, channel);
  const auto pb = channel_plane(b, channel);
  std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  const int width = a.width();
  const int height = a.height();
  const auto mu_a = filter_valid(pa, width, height, w);
  const auto mu_b = filter_valid(pb, width, height, w);
  const auto e_aa = filter_valid(aa, width, height, w);
  const auto e_bb = filter_valid(bb, width, height, w);
  const auto e_ab = filter_valid(ab, width, height, w);

  const double c1 = (opt.k1 * opt.peak) * (opt.k1 * opt.peak);
  const double c2 = (opt.k2 * opt.peak) * (opt.k2 * opt.peak);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
    sum += num / den;
  }
  return sum / static_cast<double>(mu_a.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options) {
  if (!a.same_shape(b)) {
    throw ShapeError("ssim: image dimensions differ");
  }
  double sum = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) sum += ssim_channel(a, b, ch, options);
  return sum / a.channels();
}

std::size_t Histogram::total() const noexcept {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::string Histogram::to_csv() const {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out += format_real(edges[i]);
    out += ',';
    out += format_real(edges[i + 1]);
    out += ',';
    out += std::to_string(counts[i]);
    out += '\n';
  }
  return out;
}

Histogram histogram(std::span<const double> values, int bins, double lo, double hi) {
  if (bins < 1) {
    throw ConfigError("histogram needs at least one bin");
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw ConfigError("histogram range must satisfy min < max");
  }
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i < bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
  h.edges[bins] = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericalError("histogram input contains a non-finite value");
    }
    const double pos = std::floor((v - lo) / (hi - lo) * bins);
    const int idx = pos < 0.0 ? 0 : pos >= bins ? bins - 1 : static_cast<int>(pos);
    ++h.counts[idx];
  }
  return h;
}

Histogram histogram_auto(std::span<const double> values, int bins) {
  if (values.empty()) return histogram(values, bins, 0.0, 1.0);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn < *mx) return histogram(values, bins, *mn, *mx);
  return histogram(values, bins, *mn - 0.5, *mn + 0.5);
}

nlohmann::ordered_json psnr_to_json(double psnr_db) {
  if (std::isinf(psnr_db)) return "inf";
  return psnr_db;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["psnr_db"] = psnr_to_json(psnr_db);
  j["ssim"] = ssim;
  auto& chans = j["per_channel"] = nlohmann::ordered_json::array();
  for (const auto& c : per_channel) {
    chans.push_back({{"psnr_db", psnr_to_json(c.psnr_db)}, {"ssim", c.ssim}});
  }
  auto& hists = j["histograms"] = nlohmann::ordered_json::object();
  for (const auto& h : histograms) {
    hists[h.name] = {{"edges", h.histogram.edges}, {"counts", h.histogram.counts}};
  }
  return j;
}

MetricsReport evaluate(const ImageBuffer& pred, const ImageBuffer& ref) {
  if (!pred.same_shape(ref)) {
    throw ShapeError("evaluate: prediction is " + std::to_string(pred.width()) + "x" +
                     std::to_string(pred.height()) + "x" +
                     std::to_string(pred.channels()) + ", reference is " +
                     std::to_string(ref.width()) + "x" + std::to_string(ref.height()) +
                     "x" + std::to_string(ref.channels()));
  }
  if (pred.range() != ValueRange::kUnit || ref.range() != ValueRange::kUnit) {
    throw ConfigError("evaluate expects unit-range images");
  }
  MetricsReport report;
  report.psnr_db = psnr(pred, ref);
  report.ssim = ssim(pred, ref);
  for (int ch = 0; ch < pred.channels(); ++ch) {
    std::vector<double> pa(pred.pixel_count()), pb(pred.pixel_count());
    for (std::size_t p = 0; p < pa.size(); ++p) {
      pa[p] = pred.pixels()[p * pred.channels() + ch];
      pb[p] = ref.pixels()[p * ref.channels() + ch];
    }
    report.per_channel.push_back({psnr(pa, pb), ssim_channel(pred, ref, ch)});
  }
  return report;
}

}  // namespace eoren

#include <doctest.h>

#include <cmath>
#include <random>

#include "eoren/error.hpp"
#include "eoren/metrics.hpp"
#include "oracles.hpp"

using namespace eoren;

namespace {

ImageBuffer filled(int w, int h, int c, double v) {
  ImageBuffer img(w, h, c);
  std::fill(img.pixels().begin(), img.pixels().end(), v);
  return img;
}

}  // namespace

TEST_CASE("psnr") {
  std::mt19937_64 rng(1);
  const auto img = oracle::random_image(rng, 16, 16, 3);
  CHECK(std::isinf(psnr(img, img)));
  CHECK(psnr(filled(4, 4, 1, 0.0), filled(4, 4, 1, 0.5)) ==
        doctest::Approx(6.0206).epsilon(1e-4 / 6.0206));
  CHECK(psnr(filled(4, 4, 1, 0.0), filled(4, 4, 1, 0.5)) ==
        doctest::Approx(10 * std::log10(4.0)).epsilon(1e-14));
  CHECK(psnr(filled(2, 2, 1, 0.0), filled(2, 2, 1, 5.0), 10.0) ==
        doctest::Approx(10 * std::log10(4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(psnr(img, filled(16, 15, 3, 0.0)), ShapeError);
  CHECK_THROWS_AS(psnr(img, img, 0.0), ConfigError);
}

TEST_CASE("psnr falls as noise grows") {
  std::mt19937_64 rng(2);
  const auto img = oracle::random_image(rng, 32, 32, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 noise_rng(seed);
    std::normal_distribution<double> n;
    std::vector<double> z(img.pixels().size());
    for (double& v : z) v = n(noise_rng);
    double prev = INFINITY;
    for (double sigma : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      ImageBuffer noisy = img;
      for (std::size_t i = 0; i < z.size(); ++i) noisy.pixels()[i] += sigma * z[i];
      const double p = psnr(noisy, img);
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("ssim") {
  std::mt19937_64 rng(3);
  const auto a = oracle::random_image(rng, 24, 20, 3);
  const auto b = oracle::random_image(rng, 24, 20, 3);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);

  SUBCASE("inverted binary image is anti-correlated") {
    ImageBuffer bin(16, 16, 1);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) bin.at(r, c, 0) = ((r / 3 + c / 2) % 2) ? 1.0 : 0.0;
    }
    ImageBuffer inv = bin;
    for (double& v : inv.pixels()) v = 1.0 - v;
    CHECK(ssim(bin, inv) < 0.0);
  }
  SUBCASE("small constant offsets barely matter") {
    ImageBuffer mid = oracle::random_image(rng, 24, 24, 1);
    for (double& v : mid.pixels()) v = 0.3 + 0.4 * v;
    ImageBuffer other = mid;
    std::normal_distribution<double> n(0.0, 0.05);
    for (double& v : other.pixels()) v += n(rng);
    const double base = ssim(mid, other);
    for (double c : {-0.1, 0.1}) {
      ImageBuffer ms = mid, os = other;
      for (double& v : ms.pixels()) v += c;
      for (double& v : os.pixels()) v += c;
      CHECK(std::abs(ssim(ms, os) - base) < 1e-2);
    }
  }
  SUBCASE("window larger than the image") {
    CHECK_THROWS_AS(ssim(filled(10, 30, 1, 0.1), filled(10, 30, 1, 0.1)), ConfigError);
  }
  SUBCASE("multi-channel is the mean of channels") {
    const double mean = (ssim_channel(a, b, 0) + ssim_channel(a, b, 1) + ssim_channel(a, b, 2)) / 3;
    CHECK(ssim(a, b) == doctest::Approx(mean).epsilon(1e-15));
  }
}

TEST_CASE("histogram") {
  SUBCASE("bin arithmetic") {
    const std::vector<double> v = {0.0, 0.5, 1.0};
    const auto h = histogram(v, 2, 0.0, 1.0);
    CHECK(h.counts == std::vector<std::size_t>{1, 2});
    CHECK(h.edges == std::vector<double>{0.0, 0.5, 1.0});
  }
  SUBCASE("empty input") {
    const auto h = histogram({}, 4, 0.0, 1.0);
    CHECK(h.total() == 0);
    CHECK(h.counts.size() == 4);
  }
  SUBCASE("out of range values go to the end bins") {
    const std::vector<double> v = {-3.0, 0.6, 7.0};
    const auto h = histogram(v, 4, 0.0, 1.0);
    CHECK(h.counts.front() == 1);
    CHECK(h.counts.back() == 1);
    CHECK(h.total() == 3);
  }
  SUBCASE("uniform samples") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(10000);
    for (double& x : v) x = u(rng);
    const auto h = histogram(v, 10, 0.0, 1.0);
    CHECK(h.total() == 10000);
    const double sigma = std::sqrt(10000 * 0.1 * 0.9);
    for (auto c : h.counts) CHECK(std::abs(static_cast<double>(c) - 1000.0) < 5 * sigma);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(histogram({}, 0, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(histogram({}, 3, 1.0, 1.0), ConfigError);
    const std::vector<double> bad = {NAN};
    CHECK_THROWS_AS(histogram(bad, 3, 0.0, 1.0), NumericalError);
  }
  SUBCASE("csv and auto range") {
    const std::vector<double> v = {2.0, 2.0};
    const auto h = histogram_auto(v, 2);
    CHECK(h.to_csv() == "bin_left,bin_right,count\n1.5,2,0\n2,2.5,2\n");
  }
}

TEST_CASE("metrics report") {
  std::mt19937_64 rng(5);
  const auto a = oracle::random_image(rng, 12, 12, 3);
  const auto r = evaluate(a, a);
  const auto j = r.to_json();
  CHECK(j["psnr_db"] == "inf");
  CHECK(j["ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["per_channel"].size() == 3);
  const auto b = oracle::random_image(rng, 12, 12, 3);
  const auto rb = evaluate(a, b);
  CHECK(rb.ssim >= -1.0);
  CHECK(rb.ssim <= 1.0);
  CHECK(rb.psnr_db >= 0.0);
  CHECK_THROWS_AS(evaluate(a, filled(12, 12, 1, 0.0)), ShapeError);
}

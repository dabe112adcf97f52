#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "eoren/error.hpp"
#include "eoren/gma.hpp"
#include "oracles.hpp"

using namespace eoren;

namespace {

// Quadruple loop with explicit clamped indices.
std::vector<double> loop_correlate(const ImageBuffer& img, const DirectionalFilter& f) {
  std::vector<double> out(img.pixels().size());
  for (int ch = 0; ch < img.channels(); ++ch) {
    for (int r = 0; r < img.height(); ++r) {
      for (int c = 0; c < img.width(); ++c) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            const int rr = std::clamp(r + i - 1, 0, img.height() - 1);
            const int cc = std::clamp(c + j - 1, 0, img.width() - 1);
            acc += f.entries[i][j] * img.at(rr, cc, ch);
          }
        }
        out[(static_cast<std::size_t>(r) * img.width() + c) * img.channels() + ch] = acc;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("filter magnitude") {
  CHECK(filter_magnitude(sobel_x()) == 8.0);
  CHECK(filter_magnitude(sobel_y()) == 8.0);
  CHECK(filter_magnitude(DirectionalFilter{}) == 0.0);
  DirectionalFilter f;
  f.entries[0][1] = 1.0;
  f.entries[1][2] = -2.0;
  f.entries[2][0] = 0.5;
  CHECK(filter_magnitude(f) == 3.5);
}

TEST_CASE("convolve2d") {
  SUBCASE("constant image gives zeros, borders included") {
    ImageBuffer img(7, 5, 1);
    std::fill(img.pixels().begin(), img.pixels().end(), 0.3);
    for (double v : convolve2d(img, sobel_x())) CHECK(v == 0.0);
    for (double v : convolve2d(img, sobel_y())) CHECK(v == 0.0);
  }
  SUBCASE("ramp interior response is 8a") {
    const double a = 0.013;
    const auto img = oracle::ramp(9, 6, a);
    const auto gx = convolve2d(img, sobel_x());
    for (int r = 0; r < 6; ++r) {
      for (int c = 1; c < 8; ++c) {
        CHECK(gx[r * 9 + c] == doctest::Approx(8 * a).epsilon(1e-12));
      }
    }
  }
  SUBCASE("random image equals the loop reference") {
    std::mt19937_64 rng(3);
    const auto img = oracle::random_image(rng, 5, 5, 3);
    DirectionalFilter f;
    std::uniform_real_distribution<double> u(-2, 2);
    for (auto& row : f.entries) {
      for (double& v : row) v = u(rng);
    }
    for (const auto& filt : {sobel_x(), sobel_y(), f}) {
      const auto got = convolve2d(img, filt);
      const auto want = loop_correlate(img, filt);
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14).scale(1.0));
      }
    }
  }
  SUBCASE("empty image is rejected") {
    CHECK_THROWS(convolve2d(ImageBuffer{}, sobel_x()));
  }
}

TEST_CASE("gma on a ramp") {
  const double a = 0.002;
  const auto img = oracle::ramp(256, 8, a, ValueRange::kSigned);
  const auto field = gma_sobel(img);
  for (int r = 0; r < 8; ++r) {
    for (int c = 1; c < 255; ++c) {
      const auto i = static_cast<std::size_t>(r) * 256 + c;
      CHECK(field.gx[i] == doctest::Approx(128 * a).epsilon(1e-12));
      CHECK(field.gy[i] == 0.0);
    }
  }
}

TEST_CASE("gma identities") {
  std::mt19937_64 rng(8);
  const auto img = oracle::random_image(rng, 12, 9, 3);
  const auto field = gma_sobel(img);
  const auto raw = raw_sobel(img);

  SUBCASE("equals raw Sobel scaled by size over magnitude") {
    for (std::size_t i = 0; i < raw.gx.size(); ++i) {
      CHECK(field.gx[i] == doctest::Approx(raw.gx[i] / 8 * (12 / 2.0)).epsilon(1e-13));
      CHECK(field.gy[i] == doctest::Approx(raw.gy[i] / 8 * (9 / 2.0)).epsilon(1e-13));
      CHECK(raw.gx[i] == doctest::Approx(8 * (2.0 / 12) * field.gx[i]).epsilon(1e-13));
    }
  }
  SUBCASE("scale equivariance and shift invariance") {
    ImageBuffer scaled = img;
    ImageBuffer shifted = img;
    for (double& v : scaled.pixels()) v *= 0.25;
    for (double& v : shifted.pixels()) v += 0.125;
    const auto fs = gma_sobel(scaled);
    const auto fsh = gma_sobel(shifted);
    for (std::size_t i = 0; i < field.gx.size(); ++i) {
      CHECK(fs.gx[i] == doctest::Approx(0.25 * field.gx[i]).epsilon(1e-13));
      CHECK(fsh.gx[i] == doctest::Approx(field.gx[i]).epsilon(1e-12).scale(1.0));
      CHECK(fsh.gy[i] == doctest::Approx(field.gy[i]).epsilon(1e-12).scale(1.0));
    }
  }
  SUBCASE("custom coordinate range") {
    const auto f4 = gma(img, sobel_x(), sobel_y(), 4.0, 1.0);
    for (std::size_t i = 0; i < raw.gx.size(); ++i) {
      CHECK(f4.gx[i] == doctest::Approx(raw.gx[i] / 8 * 3.0).epsilon(1e-13));
      CHECK(f4.gy[i] == doctest::Approx(raw.gy[i] / 8 * 9.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("gma errors") {
  std::mt19937_64 rng(1);
  const auto img = oracle::random_image(rng, 4, 4, 1);
  CHECK_THROWS_AS(gma(img, DirectionalFilter{}, sobel_y()), InvalidFilter);
  CHECK_THROWS_AS(gma(img, sobel_x(), DirectionalFilter{}), InvalidFilter);
  CHECK_THROWS_AS(gma(img, sobel_x(), sobel_y(), 0.0, 2.0), ConfigError);
  CHECK_THROWS_AS(gma(img, sobel_x(), sobel_y(), 2.0, -1.0), ConfigError);
}

TEST_CASE("gradient field binary layout") {
  std::mt19937_64 rng(2);
  const auto field = gma_sobel(oracle::random_image(rng, 5, 3, 3));
  const auto bytes = encode_gradient_field(field);
  REQUIRE(bytes.size() == 12 + 2 * 5 * 3 * 3 * 8);
  // H, W, C little-endian
  CHECK(bytes[0] == 3);
  CHECK(bytes[4] == 5);
  CHECK(bytes[8] == 3);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 12, 8);
  CHECK(first == field.gx[0]);

  const auto back = decode_gradient_field(bytes);
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.channels == 3);
  CHECK(back.gx == field.gx);
  CHECK(back.gy == field.gy);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_gradient_field(truncated), DecodeError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_gradient_field(extra), DecodeError);
  auto bad_channels = bytes;
  bad_channels[8] = 2;
  CHECK_THROWS_AS(decode_gradient_field(bad_channels), DecodeError);
}

TEST_CASE("gradient magnitude image") {
  const auto zero = gradient_magnitude_image(gma_sobel(ImageBuffer(4, 4, 1)));
  for (double v : zero.pixels()) CHECK(v == 0.0);
  const auto field = gma_sobel(oracle::ramp(6, 4, 0.1));
  const auto img = gradient_magnitude_image(field);
  CHECK(*std::max_element(img.pixels().begin(), img.pixels().end()) == 1.0);
}

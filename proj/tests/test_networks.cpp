#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "eoren/error.hpp"
#include "eoren/networks.hpp"
#include "oracles.hpp"

using namespace eoren;

TEST_CASE("siren_init") {
  SUBCASE("deterministic in the seed") {
    CHECK(siren_init({2, 16, 16, 1}, 30.0, 7) == siren_init({2, 16, 16, 1}, 30.0, 7));
    CHECK_FALSE(siren_init({2, 16, 16, 1}, 30.0, 7) == siren_init({2, 16, 16, 1}, 30.0, 8));
  }
  SUBCASE("weight bounds") {
    const auto p = siren_init({2, 16, 16, 1}, 30.0, 7);
    CHECK(p.layers[0].weight.cwiseAbs().maxCoeff() <= 0.5);
    const double hidden = std::sqrt(6.0 / 16) / 30.0;
    CHECK(p.layers[1].weight.cwiseAbs().maxCoeff() <= hidden);
    CHECK(p.layers[2].weight.cwiseAbs().maxCoeff() <= hidden);
    CHECK(p.layers[1].bias.cwiseAbs().maxCoeff() <= 0.25);
    // The bound is actually used, not something much tighter.
    CHECK(p.layers[1].weight.cwiseAbs().maxCoeff() > 0.8 * hidden);
  }
  SUBCASE("invalid dims") {
    CHECK_THROWS_AS(siren_init({3, 4, 1}, 30.0, 0), ConfigError);
    CHECK_THROWS_AS(siren_init({2, 0, 1}, 30.0, 0), ConfigError);
    CHECK_THROWS_AS(siren_init({2, 1}, 30.0, 0), ConfigError);
    CHECK_THROWS_AS(siren_init({2, 4, 1}, 0.0, 0), ConfigError);
  }
}

TEST_CASE("tuner_init") {
  const auto t = tuner_init(3);
  CHECK(t.alpha == Eigen::VectorXd::Ones(3));
  CHECK(t.beta == Eigen::VectorXd::Zero(3));
  CHECK_THROWS_AS(tuner_init(0), ConfigError);
}

TEST_CASE("eoren_forward") {
  std::mt19937_64 rng(4);
  const auto coords = oracle::random_coords(rng, 10);
  const auto g = siren_init({2, 16, 16, 3}, 30.0, 4);

  SUBCASE("identity tuner reproduces g exactly") {
    CHECK(eoren_forward({g, tuner_init(3)}, coords) == forward(g, coords));
  }
  SUBCASE("affine arithmetic") {
    SirenParams c = siren_init({2, 4, 1}, 30.0, 0);
    for (auto& l : c.layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
    c.layers.back().bias[0] = 0.5;
    ChannelTuner t{Eigen::VectorXd::Constant(1, 0.6), Eigen::VectorXd::Constant(1, 0.2)};
    const auto v = eoren_forward({c, t}, coords);
    CHECK(v(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("jacobian is alpha times that of g, checked by finite differences") {
    ChannelTuner t{Eigen::Vector3d(0.5, -2.0, 1.5), Eigen::Vector3d(0.1, 0.2, -0.3)};
    const EorenModel m{g, t};
    const auto j = eoren_forward_with_input_jacobian(m, coords);
    for (int b = 0; b < 10; ++b) {
      const auto fd = oracle::jacobian_point(g, coords(0, b), coords(1, b), 1e-4);
      for (int c = 0; c < 3; ++c) {
        const double want_x = t.alpha[c] * fd[c][0];
        const double want_y = t.alpha[c] * fd[c][1];
        CHECK(oracle::max_rel_error(&j.dx(c, b), &want_x, 1) < 1e-5);
        CHECK(oracle::max_rel_error(&j.dy(c, b), &want_y, 1) < 1e-5);
      }
    }
  }
  SUBCASE("alpha = 1 leaves the jacobian bitwise unchanged for any beta") {
    ChannelTuner t{Eigen::VectorXd::Ones(3), Eigen::Vector3d(0.7, -0.2, 3.0)};
    const auto j = eoren_forward_with_input_jacobian({g, t}, coords);
    const auto jg = forward_with_input_jacobian(g, coords);
    CHECK(j.dx == jg.dx);
    CHECK(j.dy == jg.dy);
  }
  SUBCASE("channel mismatch") {
    CHECK_THROWS_AS(eoren_forward({g, tuner_init(1)}, coords), ShapeError);
  }
}

TEST_CASE("closed_form_tuner") {
  SUBCASE("two-point line fit") {
    Eigen::MatrixXd g(1, 2), f(1, 2);
    g << 0.0, 1.0;
    f << 0.2, 0.8;
    const auto t = closed_form_tuner(g, f);
    CHECK(t.alpha[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(t.beta[0] == doctest::Approx(0.2).epsilon(1e-14));
  }
  SUBCASE("f = g gives the identity") {
    std::mt19937_64 rng(1);
    const auto g = oracle::random_matrix(rng, 3, 50);
    const auto t = closed_form_tuner(g, g);
    for (int c = 0; c < 3; ++c) {
      CHECK(t.alpha[c] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::abs(t.beta[c]) < 1e-14);
    }
  }
  SUBCASE("never worse than a perturbed solution") {
    std::mt19937_64 rng(2);
    const auto g = oracle::random_matrix(rng, 2, 40);
    const auto f = oracle::random_matrix(rng, 2, 40);
    const auto t = closed_form_tuner(g, f);
    const double best = oracle::mse(t.apply(g), f);
    for (double d : {-1e-3, 1e-3}) {
      ChannelTuner u = t;
      u.alpha[0] += d;
      CHECK(oracle::mse(u.apply(g), f) > best);
      u = t;
      u.beta[1] += d;
      CHECK(oracle::mse(u.apply(g), f) > best);
    }
  }
  SUBCASE("degenerate channel") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 4, 0.25);
    g.row(1) << 0.0, 1.0, 2.0, 3.0;
    const Eigen::MatrixXd f = Eigen::MatrixXd::Constant(2, 4, 0.75);
    try {
      closed_form_tuner(g, f);
      FAIL("expected DegenerateChannel");
    } catch (const DegenerateChannel& e) {
      CHECK(e.channel() == 0);
    }
    const auto t = closed_form_tuner_or_shift(g, f);
    CHECK(t.alpha[0] == 1.0);
    CHECK(t.beta[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(closed_form_tuner(Eigen::MatrixXd::Zero(1, 3), Eigen::MatrixXd::Zero(1, 4)),
                    ShapeError);
    CHECK_THROWS_AS(closed_form_tuner(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)),
                    ConfigError);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto edge = siren_init({2, 7, 5, 3}, 25.0, 12);
  ChannelTuner t{Eigen::Vector3d(1.5, -0.25, 1e-300), Eigen::Vector3d(-0.0, 0.1, 3.0)};

  SUBCASE("with and without tuner, bit exact") {
    for (const Checkpoint& ckpt : {Checkpoint{edge, t}, Checkpoint{edge, std::nullopt}}) {
      const auto bytes = encode_checkpoint(ckpt);
      const auto back = decode_checkpoint(bytes);
      CHECK(back.edge == ckpt.edge);
      CHECK(back.edge.omega0 == 25.0);
      CHECK(back.tuner.has_value() == ckpt.tuner.has_value());
      if (back.tuner) {
        CHECK(*back.tuner == *ckpt.tuner);
        CHECK(std::signbit(back.tuner->beta[0]));
      }
      CHECK(encode_checkpoint(back) == bytes);
    }
  }
  SUBCASE("file io") {
    const auto path = std::filesystem::temp_directory_path() / "eoren_ckpt_test.bin";
    save_checkpoint({edge, t}, path);
    const auto back = load_checkpoint(path);
    CHECK(back.edge == edge);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("corruption is detected") {
    const auto bytes = encode_checkpoint({edge, t});
    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), DecodeError);
    auto version = bytes;
    version[8] = 99;
    CHECK_THROWS_AS(decode_checkpoint(version), DecodeError);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_checkpoint(truncated), DecodeError);
    auto trailing = bytes;
    trailing.push_back(1);
    CHECK_THROWS_AS(decode_checkpoint(trailing), DecodeError);
  }
}

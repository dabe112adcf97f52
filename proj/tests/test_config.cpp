#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "eoren/config.hpp"
#include "eoren/error.hpp"

using namespace eoren;

TEST_CASE("config defaults") {
  const auto cfg = parse_config_text("");
  CHECK(cfg == TrainConfig{});
  CHECK(cfg.epochs_total == 1000);
  CHECK(cfg.epochs_tuner == 50);
  CHECK(cfg.lr_edge == 1e-4);
  CHECK(cfg.lr_tuner == 1e-2);
  CHECK(cfg.lambda == 0.5);
  CHECK(cfg.hidden_dims == std::vector<int>{256, 256, 256});
  CHECK(cfg.omega0 == 30.0);
  CHECK(cfg.layer_dims(3) == std::vector<int>{2, 256, 256, 256, 3});
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config_text(
      "# comment line\n"
      "mode = grad\n"
      "epochs_total=300   # trailing\n"
      "\n"
      "hidden_dims = 32, 16\n"
      "seed=42\r\n"
      "tuner_solver = closed_form\n");
  CHECK(cfg.mode == TrainMode::kGrad);
  CHECK(cfg.epochs_total == 300);
  CHECK(cfg.hidden_dims == std::vector<int>{32, 16});
  CHECK(cfg.seed == 42);
  CHECK(cfg.tuner_solver == TunerSolver::kClosedForm);
  CHECK(cfg.lr_edge == 1e-4);

  TrainConfig base;
  base.seed = 9;
  CHECK(parse_config_text("lambda=0.25", base).seed == 9);
}

TEST_CASE("config errors") {
  try {
    parse_config_text("learning_rate = 3");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
  try {
    parse_config_text("epochs_total = lots");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epochs_total") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("hidden_dims = 3,,4"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("mode = sketch"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words"), ConfigError);

  try {
    parse_config_text("epochs_tuner = 2000").validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("epochs_tuner") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("lambda = 1.5").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config_text("lr_edge = 0").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config_text("hidden_dims = 0").validate(), ConfigError);
  CHECK_NOTHROW(parse_config_text("mode = grad\nepochs_tuner = 1000").validate());
  CHECK_THROWS_AS(parse_config_text("epochs_tuner = 1000").validate(), ConfigError);
}

TEST_CASE("config text round trip") {
  TrainConfig cfg;
  cfg.mode = TrainMode::kCompose;
  cfg.lr_edge = 3.0000000000000004e-5;
  cfg.lambda = 0.1;
  cfg.hidden_dims = {7, 9, 11};
  cfg.seed = 18446744073709551615ull;
  cfg.compose_loss = ComposeLoss::kWeighted;
  const auto text = config_to_text(cfg);
  CHECK(parse_config_text(text) == cfg);
  CHECK(config_to_text(parse_config_text(text)) == text);
  for (const auto& key : config_keys()) {
    CHECK(text.find(key + "=") != std::string::npos);
  }
}

TEST_CASE("config file") {
  const auto path = std::filesystem::temp_directory_path() / "eoren_cfg_test.txt";
  std::ofstream(path) << "omega0 = 12.5\n";
  CHECK(load_config(path.string()).omega0 == 12.5);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path.string()), IoError);
}

#include "eoren/config.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

#include "eoren/error.hpp"
#include "eoren/format.hpp"
#include "eoren/io_util.hpp"

namespace eoren {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + expected +
                    ", got '" + std::string(value) + "'");
}

double real_value(std::string_view key, std::string_view value) {
  const auto v = parse_real(value);
  if (!v) bad_value(key, value, "a real number");
  return *v;
}

template <typename Int>
Int int_value(std::string_view key, std::string_view value) {
  const auto v = parse_integer<Int>(value);
  if (!v) bad_value(key, value, "an integer");
  return *v;
}

std::vector<int> int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = value.find(',', pos);
    const auto item = trim(value.substr(pos, comma == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : comma - pos));
    const auto v = parse_integer<int>(item);
    if (!v) bad_value(key, value, "a comma-separated list of integers");
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "mode",   "epochs_total", "epochs_tuner", "lr_edge",   "lr_tuner",     "lambda",
      "hidden_dims", "omega0",  "seed",         "log_every", "tuner_solver", "compose_loss"};
  return keys;
}

TrainMode parse_mode(std::string_view s) {
  if (s == "pixel") return TrainMode::kPixel;
  if (s == "grad") return TrainMode::kGrad;
  if (s == "eoren") return TrainMode::kEoren;
  if (s == "compose") return TrainMode::kCompose;
  bad_value("mode", s, "one of pixel, grad, eoren, compose");
}

void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "epochs_total") {
    cfg.epochs_total = int_value<int>(key, value);
  } else if (key == "epochs_tuner") {
    cfg.epochs_tuner = int_value<int>(key, value);
  } else if (key == "lr_edge") {
    cfg.lr_edge = real_value(key, value);
  } else if (key == "lr_tuner") {
    cfg.lr_tuner = real_value(key, value);
  } else if (key == "lambda") {
    cfg.lambda = real_value(key, value);
  } else if (key == "hidden_dims") {
    cfg.hidden_dims = int_list(key, value);
  } else if (key == "omega0") {
    cfg.omega0 = real_value(key, value);
  } else if (key == "seed") {
    cfg.seed = int_value<std::uint64_t>(key, value);
  } else if (key == "log_every") {
    cfg.log_every = int_value<int>(key, value);
  } else if (key == "tuner_solver") {
    if (value == "gradient") {
      cfg.tuner_solver = TunerSolver::kGradient;
    } else if (value == "closed_form") {
      cfg.tuner_solver = TunerSolver::kClosedForm;
    } else {
      bad_value(key, value, "gradient or closed_form");
    }
  } else if (key == "compose_loss") {
    if (value == "blended") {
      cfg.compose_loss = ComposeLoss::kBlended;
    } else if (value == "weighted") {
      cfg.compose_loss = ComposeLoss::kWeighted;
    } else {
      bad_value(key, value, "blended or weighted");
    }
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

TrainConfig parse_config_text(std::string_view text, TrainConfig base) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  const auto bytes = read_binary_file(path);
  return parse_config_text(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                            bytes.size()),
                           std::move(base));
}

std::string config_to_text(const TrainConfig& cfg) {
  std::string dims;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    if (i > 0) dims += ',';
    dims += std::to_string(cfg.hidden_dims[i]);
  }
  std::string out;
  const auto line = [&](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  line("mode", to_string(cfg.mode));
  line("epochs_total", std::to_string(cfg.epochs_total));
  line("epochs_tuner", std::to_string(cfg.epochs_tuner));
  line("lr_edge", format_real(cfg.lr_edge));
  line("lr_tuner", format_real(cfg.lr_tuner));
  line("lambda", format_real(cfg.lambda));
  line("hidden_dims", dims);
  line("omega0", format_real(cfg.omega0));
  line("seed", std::to_string(cfg.seed));
  line("log_every", std::to_string(cfg.log_every));
  line("tuner_solver", to_string(cfg.tuner_solver));
  line("compose_loss", to_string(cfg.compose_loss));
  return out;
}

}  // namespace eoren

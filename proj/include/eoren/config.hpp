#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "eoren/training.hpp"

namespace eoren {

/// Keys accepted in config files and by --set, in file order.
const std::vector<std::string>& config_keys();

/// Assigns one key. Unknown keys and malformed values throw ConfigError
/// naming the key.
void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Parses "key = value" lines on top of `base`. Blank lines and text after
/// '#' are ignored. Does not validate the result.
TrainConfig parse_config_text(std::string_view text, TrainConfig base = {});

TrainConfig load_config(const std::string& path, TrainConfig base = {});

/// One "key=value" line per key; parse_config_text of the result gives back
/// an equal config.
std::string config_to_text(const TrainConfig& cfg);

TrainMode parse_mode(std::string_view s);

}  // namespace eoren

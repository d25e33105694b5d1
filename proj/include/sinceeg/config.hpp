#pragma once

#include "sinceeg/network.hpp"
#include "sinceeg/preprocess.hpp"
#include "sinceeg/training.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>

namespace sinceeg {

/// Everything a run needs besides data: model, optimizer and preprocessing.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::optional<double> init_std_hz;  // unset: sqrt(fs/4)
    ZScoreMode zscore = ZScoreMode::per_channel;
    std::set<std::string> explicit_keys;  // keys present in the parsed file

    bool is_set(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

/// Flat `key = value` text; '#' starts a comment. Unknown keys, repeated
/// keys and malformed values raise ConfigError naming the key. Model
/// invariants are not checked here.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Stable `key = value` rendering of every resolved setting.
std::string canonical_config_text(const RunConfig& config);

/// 64-bit FNV-1a rendered as 16 hex digits.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string fnv1a_hex(const std::string& text);

}  // namespace sinceeg

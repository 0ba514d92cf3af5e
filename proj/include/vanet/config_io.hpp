#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "vanet/core_model.hpp"

namespace vanet {

/// Parses a JSON configuration document. Every key is optional; missing
/// keys keep the RunConfig defaults. Unknown keys raise ConfigError so
/// typos do not silently fall back to defaults. The result is not
/// validated; call validate_config for that.
RunConfig parse_config(std::string_view text);

RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, every field present). parse_config of the
/// output reproduces the input configuration.
std::string dump_config(const RunConfig& config);

/// 64-bit FNV-1a of dump_config, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace vanet

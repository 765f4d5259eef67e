#pragma once

#include <string>
#include <string_view>

#include "rgcf/training.hpp"

namespace rgcf {

// Flat "key = value" text, one pair per line, '#' starts a comment. Keys are
// the ModelConfig field names; unknown keys and malformed values are errors.
ModelConfig parse_config_text(std::string_view text);
ModelConfig load_config(const std::string& path);

std::string serialize_config(const ModelConfig& cfg);

}  // namespace rgcf

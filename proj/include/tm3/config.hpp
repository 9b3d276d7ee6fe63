#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tm3/tracker.hpp"

namespace tm3 {

/// Plain `key = value` lines, `#` comments, in file order. Repeated keys
/// are kept.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

/// Keys are TrackerConfig field names; a repeated key takes the last value.
/// Unknown keys and unparsable values throw ValidationError.
TrackerConfig parse_tracker_config(const std::string& text, TrackerConfig base = {});

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tm3

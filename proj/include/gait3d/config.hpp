#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace gait3d {

/// `key = value` lines; '#' starts a comment; keys use the long flag
/// spelling without dashes.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);  // throws ParameterError
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& values);

}  // namespace gait3d

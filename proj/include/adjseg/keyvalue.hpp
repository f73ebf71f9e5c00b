#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace adjseg {

// Parses "key=value" lines. Blank lines and lines starting with '#' are
// skipped; whitespace around keys and values is trimmed. Duplicate keys or
// lines without '=' raise ConfigError.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

double parse_double(const std::string& key, const std::string& value);
long long parse_integer(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace adjseg

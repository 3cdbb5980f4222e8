#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace restamp {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// FNV-1a, 64-bit. Stable across platforms, used for replay digests and body hashes.
std::uint64_t fnv1a64(std::string_view data);
std::string to_hex64(std::uint64_t value);

// Ratio as integer percent, rounded half-up (Table 1/2 style).
int percent_half_up(std::int64_t numerator, std::int64_t denominator);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// Replaces {{name}} placeholders; unknown placeholders are left intact.
std::string interpolate(std::string_view text, const std::map<std::string, std::string>& vars);

// Media type without parameters, lowercased ("application/json; charset=utf-8" -> "application/json").
std::string normalize_content_type(std::string_view value);

}  // namespace restamp

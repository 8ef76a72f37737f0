#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace matef {

/// Current UTC time as ISO-8601 text, e.g. "2024-05-01T12:30:00Z".
std::string utc_now_iso8601();

/// Formats a time point as ISO-8601 UTC with second resolution.
std::string to_iso8601(std::chrono::system_clock::time_point tp);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string to_lower(std::string_view s);
std::string join(std::span<const std::string> parts, std::string_view sep);

bool is_lower_hex(std::string_view s);

/// Reads a whole file into a byte buffer. Throws ConfigError on I/O failure.
std::vector<std::byte> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::byte> data);
void write_file_text(const std::string& path, std::string_view text);

std::string_view as_text(std::span<const std::byte> bytes);
std::span<const std::byte> as_bytes(std::string_view text);

}  // namespace matef

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace matef::csv {

/// Quotes a field per RFC 4180 when it contains separators, quotes or newlines.
std::string escape(std::string_view field);

std::string join_row(std::span<const std::string> fields);

/// Parses full CSV text (handles quoted fields, embedded commas/newlines,
/// doubled quotes, and CRLF). Throws ParseError with the offending line on
/// malformed quoting.
std::vector<std::vector<std::string>> parse(std::string_view text);

}  // namespace matef::csv

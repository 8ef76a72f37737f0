#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace matef {

/// MD5 of a byte buffer as 32-char lowercase hex.
std::string md5_hex(std::span<const std::byte> data);

/// SHA-256 of a byte buffer as 64-char lowercase hex.
std::string sha256_hex(std::span<const std::byte> data);

}  // namespace matef

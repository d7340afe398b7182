#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xicm {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws FormatError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace xicm

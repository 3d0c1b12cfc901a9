#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pool {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);  // throws ParseError on malformed input

std::string to_base64(ByteView data);
Bytes from_base64(std::string_view b64);  // throws ParseError

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView data) {
  return std::string(data.begin(), data.end());
}

}  // namespace pool

#include "pool/bytes.hpp"

#include <sodium.h>

#include "pool/errors.hpp"

namespace pool {

std::string to_hex(ByteView data) {
  std::string out(data.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), data.data(), data.size());
  out.resize(data.size() * 2);
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("odd-length hex string");
  Bytes out(hex.size() / 2);
  std::size_t written = 0;
  if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr,
                     &written, nullptr) != 0 ||
      written != out.size()) {
    throw ParseError("invalid hex string");
  }
  return out;
}

std::string to_base64(ByteView data) {
  const std::size_t cap =
      sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(cap, '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.find('\0'));
  return out;
}

Bytes from_base64(std::string_view b64) {
  Bytes out(b64.size());  // upper bound
  std::size_t written = 0;
  if (sodium_base642bin(out.data(), out.size(), b64.data(), b64.size(),
                        nullptr, &written, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw ParseError("invalid base64 string");
  }
  out.resize(written);
  return out;
}

}  // namespace pool

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "pool/errors.hpp"

// GF(2^8) arithmetic with the reduction polynomial x^8+x^4+x^3+x+1 (0x11b),
// generator 0x03. Addition is xor.
namespace pool::gf256 {

namespace detail {

struct Tables {
  std::array<std::uint8_t, 256> exp{};
  std::array<std::uint8_t, 256> log{};
};

constexpr Tables build_tables() {
  Tables t{};
  std::uint16_t x = 1;
  for (int i = 0; i < 255; ++i) {
    t.exp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(x);
    t.log[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(i);
    // multiply x by the generator 0x03 = x * 2 + x
    std::uint16_t x2 = x << 1;
    if (x2 & 0x100) x2 ^= 0x11b;
    x = static_cast<std::uint16_t>(x2 ^ x);
  }
  t.exp[255] = t.exp[0];
  return t;
}

inline constexpr Tables kTables = build_tables();

}  // namespace detail

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) {
  return a ^ b;
}

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const int s = detail::kTables.log[a] + detail::kTables.log[b];
  return detail::kTables.exp[static_cast<std::size_t>(s % 255)];
}

constexpr std::uint8_t inverse(std::uint8_t a) {
  if (a == 0) throw Error("gf256: zero has no inverse");
  return detail::kTables.exp[static_cast<std::size_t>(
      (255 - detail::kTables.log[a]) % 255)];
}

constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) {
  return mul(a, inverse(b));
}

// Horner evaluation of coeffs[0] + coeffs[1]*x + ... at x.
constexpr std::uint8_t eval_poly(std::span<const std::uint8_t> coeffs,
                                 std::uint8_t x) {
  std::uint8_t acc = 0;
  for (std::size_t i = coeffs.size(); i-- > 0;) {
    acc = add(mul(acc, x), coeffs[i]);
  }
  return acc;
}

using Point = std::pair<std::uint8_t, std::uint8_t>;  // (x, y)

// Lagrange interpolation evaluated at x = 0. Points must have distinct,
// nonzero x coordinates.
std::uint8_t interpolate_at_zero(std::span<const Point> points);

// Lagrange interpolation evaluated at arbitrary x.
std::uint8_t interpolate_at(std::span<const Point> points, std::uint8_t x);

}  // namespace pool::gf256

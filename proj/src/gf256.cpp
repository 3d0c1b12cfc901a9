#include "pool/gf256.hpp"

namespace pool::gf256 {

std::uint8_t interpolate_at(std::span<const Point> points, std::uint8_t x) {
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [xi, yi] = points[i];
    // basis_i(x) = prod_{j != i} (x - x_j) / (x_i - x_j); subtraction is xor
    std::uint8_t num = 1;
    std::uint8_t den = 1;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      const std::uint8_t xj = points[j].first;
      if (xj == xi) throw DuplicateIndex("duplicate x coordinate");
      num = mul(num, add(x, xj));
      den = mul(den, add(xi, xj));
    }
    acc = add(acc, mul(yi, div(num, den)));
  }
  return acc;
}

std::uint8_t interpolate_at_zero(std::span<const Point> points) {
  return interpolate_at(points, 0);
}

}  // namespace pool::gf256

#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "pool/bytes.hpp"

namespace pool {

// Deterministic random source. All protocol randomness (keys, nonces, salts,
// identifiers, polynomial coefficients) is drawn from one of these, so a
// single seed fixes an entire simulation run including the ledger bytes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  std::uint8_t next_byte() {
    return static_cast<std::uint8_t>(next_u64() & 0xffu);
  }

  // Uniform-ish value in [0, bound). Modulo bias is irrelevant at the bounds
  // used here; avoiding std distributions keeps output identical across
  // standard libraries.
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) b = next_byte();
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pool

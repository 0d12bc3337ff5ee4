#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace scbench::rng {

// SplitMix64 finalizer. The generator below is a pure counter walk through
// this mix, so draw i is a function of (key, i) only: sequences can be
// re-generated in any order or in parallel without changing a single bit.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named substream key: same (seed, name) always yields the same key, and
// distinct names decorrelate streams sharing one master seed.
std::uint64_t derive_key(std::uint64_t seed, std::string_view name);

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::uint64_t seed, std::string_view name) : key_(derive_key(seed, name)) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return ctr_; }

  std::uint64_t next_u64() { return at(ctr_++); }
  // Random access; does not advance the counter.
  std::uint64_t at(std::uint64_t i) const { return mix64(key_ + i * 0x9e3779b97f4a7c15ULL); }

  // Strictly inside (0, 1); never returns an endpoint.
  double uniform01() { return to_unit(next_u64()); }

  static double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal, Box-Muller on two uniforms; second value cached.
  double normal();

  // Unbiased integer in [0, bound) via rejection. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// out[i] depends on (key, i) only, so the fill parallelizes deterministically.
void fill_normal(std::uint64_t key, std::span<double> out);

// k distinct indices from [0, n), returned sorted ascending.
std::vector<std::size_t> sample_without_replacement(Stream& s, std::size_t n, std::size_t k);

// In-place Fisher-Yates.
void shuffle(Stream& s, std::span<std::size_t> idx);

}  // namespace scbench::rng

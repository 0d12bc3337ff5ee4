#include "scbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace scbench::rng {

std::uint64_t derive_key(std::uint64_t seed, std::string_view name) {
  // FNV-1a over the name, then mixed twice with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(seed) ^ h);
}

double Stream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::uint64_t Stream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("rng: bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

void fill_normal(std::uint64_t key, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::uint64_t idx = static_cast<std::uint64_t>(i);
    const double u1 = Stream::to_unit(mix64(key + (2 * idx) * 0x9e3779b97f4a7c15ULL));
    const double u2 = Stream::to_unit(mix64(key + (2 * idx + 1) * 0x9e3779b97f4a7c15ULL));
    out[static_cast<std::size_t>(i)] =
        std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
}

std::vector<std::size_t> sample_without_replacement(Stream& s, std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("rng: sample size exceeds population");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(s.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void shuffle(Stream& s, std::span<std::size_t> idx) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(s.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace scbench::rng

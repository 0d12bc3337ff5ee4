#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

// Data-parallel inner loops. Each kernel has a serial reference used by the
// tests and the benchmark tool. Reductions accumulate over fixed-size chunks
// combined in index order, so results are bit-identical for any thread count.
namespace scbench::kernels {

inline constexpr std::size_t kChunk = 4096;

double sum(std::span<const double> x);
double sum_serial(std::span<const double> x);

double dot(std::span<const double> x, std::span<const double> y);
double dot_serial(std::span<const double> x, std::span<const double> y);

// CSR adjacency: offsets has n+1 entries, nbrs holds neighbor ids.
// out[i] = sum of x[j] over neighbors j of i (0 for isolated nodes).
void neighbor_sums(std::span<const std::uint64_t> offsets, std::span<const std::uint32_t> nbrs,
                   std::span<const double> x, std::span<double> out);
void neighbor_sums_serial(std::span<const std::uint64_t> offsets,
                          std::span<const std::uint32_t> nbrs, std::span<const double> x,
                          std::span<double> out);

// Pair (cross, ss) with cross = sum_i sum_{j in N(i)} (x_i-m)(x_j-m) and
// ss = sum_i (x_i-m)^2, both over all nodes.
std::pair<double, double> moran_parts(std::span<const std::uint64_t> offsets,
                                      std::span<const std::uint32_t> nbrs,
                                      std::span<const double> x, double m);
std::pair<double, double> moran_parts_serial(std::span<const std::uint64_t> offsets,
                                             std::span<const std::uint32_t> nbrs,
                                             std::span<const double> x, double m);

// k nearest training rows per query row under squared L2, ties broken by
// lower index. train is n_train x dim row-major; out_idx is n_query x k.
void knn_indices(std::span<const double> train, std::size_t n_train, std::size_t dim,
                 std::span<const double> queries, std::size_t n_query, std::size_t k,
                 std::span<std::uint32_t> out_idx);
void knn_indices_serial(std::span<const double> train, std::size_t n_train, std::size_t dim,
                        std::span<const double> queries, std::size_t n_query, std::size_t k,
                        std::span<std::uint32_t> out_idx);

}  // namespace scbench::kernels

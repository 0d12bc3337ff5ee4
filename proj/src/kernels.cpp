#include "scbench/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

namespace scbench::kernels {

namespace {

template <typename ChunkFn>
double chunked_reduce(std::size_t n, ChunkFn&& fn) {
  const std::size_t nchunks = n == 0 ? 0 : (n - 1) / kChunk + 1;
  std::vector<double> partial(nchunks, 0.0);
  const std::int64_t nc = static_cast<std::int64_t>(nchunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < nc; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(lo + kChunk, n);
    partial[static_cast<std::size_t>(c)] = fn(lo, hi);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double sum(std::span<const double> x) {
  return chunked_reduce(x.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    return s;
  });
}

double sum_serial(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return chunked_reduce(x.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
    return s;
  });
}

double dot_serial(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void neighbor_sums(std::span<const std::uint64_t> offsets, std::span<const std::uint32_t> nbrs,
                   std::span<const double> x, std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    double s = 0.0;
    for (std::uint64_t e = offsets[u]; e < offsets[u + 1]; ++e) s += x[nbrs[e]];
    out[u] = s;
  }
}

void neighbor_sums_serial(std::span<const std::uint64_t> offsets,
                          std::span<const std::uint32_t> nbrs, std::span<const double> x,
                          std::span<double> out) {
  for (std::size_t u = 0; u < out.size(); ++u) {
    double s = 0.0;
    for (std::uint64_t e = offsets[u]; e < offsets[u + 1]; ++e) s += x[nbrs[e]];
    out[u] = s;
  }
}

std::pair<double, double> moran_parts(std::span<const std::uint64_t> offsets,
                                      std::span<const std::uint32_t> nbrs,
                                      std::span<const double> x, double m) {
  const std::size_t n = x.size();
  const double cross = chunked_reduce(n, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t u = lo; u < hi; ++u) {
      double nb = 0.0;
      for (std::uint64_t e = offsets[u]; e < offsets[u + 1]; ++e) nb += x[nbrs[e]] - m;
      s += (x[u] - m) * nb;
    }
    return s;
  });
  const double ss = chunked_reduce(n, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t u = lo; u < hi; ++u) s += (x[u] - m) * (x[u] - m);
    return s;
  });
  return {cross, ss};
}

std::pair<double, double> moran_parts_serial(std::span<const std::uint64_t> offsets,
                                             std::span<const std::uint32_t> nbrs,
                                             std::span<const double> x, double m) {
  double cross = 0.0, ss = 0.0;
  for (std::size_t u = 0; u < x.size(); ++u) {
    double nb = 0.0;
    for (std::uint64_t e = offsets[u]; e < offsets[u + 1]; ++e) nb += x[nbrs[e]] - m;
    cross += (x[u] - m) * nb;
    ss += (x[u] - m) * (x[u] - m);
  }
  return {cross, ss};
}

namespace {

void knn_one_query(std::span<const double> train, std::size_t n_train, std::size_t dim,
                   const double* q, std::size_t k, std::uint32_t* out) {
  std::vector<std::pair<double, std::uint32_t>> cand(n_train);
  for (std::size_t t = 0; t < n_train; ++t) {
    const double* row = train.data() + t * dim;
    double d = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = row[j] - q[j];
      d += diff * diff;
    }
    cand[t] = {d, static_cast<std::uint32_t>(t)};
  }
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  for (std::size_t j = 0; j < k; ++j) out[j] = cand[j].second;
}

}  // namespace

void knn_indices(std::span<const double> train, std::size_t n_train, std::size_t dim,
                 std::span<const double> queries, std::size_t n_query, std::size_t k,
                 std::span<std::uint32_t> out_idx) {
  assert(k <= n_train);
  const std::int64_t nq = static_cast<std::int64_t>(n_query);
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < nq; ++q) {
    const std::size_t i = static_cast<std::size_t>(q);
    knn_one_query(train, n_train, dim, queries.data() + i * dim, k, out_idx.data() + i * k);
  }
}

void knn_indices_serial(std::span<const double> train, std::size_t n_train, std::size_t dim,
                        std::span<const double> queries, std::size_t n_query, std::size_t k,
                        std::span<std::uint32_t> out_idx) {
  assert(k <= n_train);
  for (std::size_t i = 0; i < n_query; ++i)
    knn_one_query(train, n_train, dim, queries.data() + i * dim, k, out_idx.data() + i * k);
}

}  // namespace scbench::kernels

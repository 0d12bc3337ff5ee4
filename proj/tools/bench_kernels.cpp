// Compares the OpenMP kernels against their serial references: wall time,
// speedup, and the largest absolute deviation between the two routes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "scbench/graph.hpp"
#include "scbench/kernels.hpp"
#include "scbench/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace scbench;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s, double max_diff) {
  std::printf("%-18s serial %8.4f s   parallel %8.4f s   speedup %5.2fx   max|diff| %.3e\n", name,
              serial_s, parallel_s, serial_s / parallel_s, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t side = 1200;
  int reps = 3;
  if (argc > 1) side = static_cast<std::size_t>(std::stoul(argv[1]));
  if (argc > 2) reps = std::stoi(argv[2]);
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
  const auto g = grid_graph(side, side, true);
  const std::size_t n = g.n();
  std::printf("grid %zux%zu: %zu nodes, %zu edges\n", side, side, n, g.edge_count());

  std::vector<double> x(n), y(n);
  rng::fill_normal(1, x);
  rng::fill_normal(2, y);

  {
    double sa = 0.0, sb = 0.0;
    const double ts = time_best_of(reps, [&] { sa = kernels::sum_serial(x); });
    const double tp = time_best_of(reps, [&] { sb = kernels::sum(x); });
    report("sum", ts, tp, std::abs(sa - sb));
  }
  {
    double da = 0.0, db = 0.0;
    const double ts = time_best_of(reps, [&] { da = kernels::dot_serial(x, y); });
    const double tp = time_best_of(reps, [&] { db = kernels::dot(x, y); });
    report("dot", ts, tp, std::abs(da - db));
  }
  {
    std::vector<double> oa(n), ob(n);
    const double ts =
        time_best_of(reps, [&] { kernels::neighbor_sums_serial(g.offsets, g.nbrs, x, oa); });
    const double tp = time_best_of(reps, [&] { kernels::neighbor_sums(g.offsets, g.nbrs, x, ob); });
    double md = 0.0;
    for (std::size_t i = 0; i < n; ++i) md = std::max(md, std::abs(oa[i] - ob[i]));
    report("neighbor_sums", ts, tp, md);
  }
  {
    const double m = kernels::sum_serial(x) / static_cast<double>(n);
    std::pair<double, double> a, b;
    const double ts =
        time_best_of(reps, [&] { a = kernels::moran_parts_serial(g.offsets, g.nbrs, x, m); });
    const double tp = time_best_of(reps, [&] { b = kernels::moran_parts(g.offsets, g.nbrs, x, m); });
    report("moran_parts", ts, tp,
           std::max(std::abs(a.first - b.first), std::abs(a.second - b.second)));
  }
  {
    const std::size_t n_train = 20000, dim = 8, n_q = 2000, k = 15;
    std::vector<double> train(n_train * dim), queries(n_q * dim);
    rng::fill_normal(3, train);
    rng::fill_normal(4, queries);
    std::vector<std::uint32_t> ia(n_q * k), ib(n_q * k);
    const double ts = time_best_of(
        reps, [&] { kernels::knn_indices_serial(train, n_train, dim, queries, n_q, k, ia); });
    const double tp =
        time_best_of(reps, [&] { kernels::knn_indices(train, n_train, dim, queries, n_q, k, ib); });
    report("knn_indices", ts, tp, ia == ib ? 0.0 : 1.0);
  }
  return 0;
}

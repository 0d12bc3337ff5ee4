#include "scbench/split.hpp"

#include <cmath>

#include "scbench/errors.hpp"
#include "scbench/rng.hpp"

namespace scbench {

namespace {

// One BFS frontier sweep per level over the membership mask.
void expand_levels(const SpatialGraph& g, std::vector<std::uint8_t>& in,
                   std::vector<std::uint32_t>& frontier, std::uint32_t levels) {
  std::vector<std::uint32_t> next;
  for (std::uint32_t lvl = 0; lvl < levels; ++lvl) {
    next.clear();
    for (std::uint32_t u : frontier)
      for (std::uint32_t v : g.neighbors(u))
        if (!in[v]) {
          in[v] = 1;
          next.push_back(v);
        }
    frontier.swap(next);
    if (frontier.empty()) break;
  }
}

}  // namespace

TrainValSplit expand_from_seeds(const SpatialGraph& g, const std::vector<std::uint32_t>& seeds,
                                std::uint32_t levels, std::uint32_t buffer) {
  const std::size_t n = g.n();
  std::vector<std::uint8_t> in_val(n, 0);
  std::vector<std::uint32_t> frontier;
  for (std::uint32_t s : seeds) {
    if (s >= n) throw ValidationError("split: seed node out of range");
    if (!in_val[s]) {
      in_val[s] = 1;
      frontier.push_back(s);
    }
  }
  expand_levels(g, in_val, frontier, levels);

  std::vector<std::uint8_t> in_blocked = in_val;
  frontier.clear();
  for (std::uint32_t u = 0; u < n; ++u)
    if (in_val[u]) frontier.push_back(u);
  expand_levels(g, in_blocked, frontier, buffer);

  TrainValSplit out;
  for (std::uint32_t u = 0; u < n; ++u) {
    if (in_val[u])
      out.val.push_back(u);
    else if (in_blocked[u])
      out.buffer.push_back(u);
    else
      out.train.push_back(u);
  }
  return out;
}

TrainValSplit spatial_split(const SpatialGraph& g, const SplitParams& params) {
  const std::size_t n = g.n();
  if (n == 0) throw ValidationError("split: empty graph");
  if (params.alpha >= 1.0) throw ValidationError("split: alpha must be < 1");
  const std::size_t k = static_cast<std::size_t>(std::ceil(params.alpha * static_cast<double>(n)));
  if (k == 0) throw ValidationError("split: alpha*n rounds to zero seed nodes");

  rng::Stream stream(params.seed, "split");
  const auto sampled = rng::sample_without_replacement(stream, n, k);
  std::vector<std::uint32_t> seeds(sampled.begin(), sampled.end());
  TrainValSplit out = expand_from_seeds(g, seeds, params.levels, params.buffer);
  if (out.train.empty()) throw ValidationError("split: training set is empty");
  return out;
}

std::vector<std::uint8_t> split_roles(const SpatialGraph& g, const TrainValSplit& s) {
  std::vector<std::uint8_t> roles(g.n(), kRoleTrain);
  for (std::uint32_t u : s.val) roles[u] = kRoleVal;
  for (std::uint32_t u : s.buffer) roles[u] = kRoleBuffer;
  return roles;
}

}  // namespace scbench

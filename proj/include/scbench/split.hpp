#pragma once

#include <cstdint>
#include <vector>

#include "scbench/graph.hpp"

namespace scbench {

struct SplitParams {
  double alpha = 0.02;        // fraction of seed validation nodes
  std::uint32_t levels = 1;   // BFS expansion of seeds into the validation set
  std::uint32_t buffer = 1;   // BFS expansion of the validation set into the buffer
  std::uint64_t seed = 0;
};

// Pairwise disjoint; union covers all nodes. With buffer >= 1 no edge joins
// train to val.
struct TrainValSplit {
  std::vector<std::uint32_t> train, val, buffer;  // each sorted ascending
};

// ceil(alpha*n) seed nodes sampled without replacement from the "split"
// substream of params.seed; val = seeds expanded `levels` BFS levels;
// buffer = val expanded `buffer` levels, minus val; train = the rest.
// Throws when alpha rounds to zero seeds, alpha >= 1, or train is empty.
TrainValSplit spatial_split(const SpatialGraph& g, const SplitParams& params);

// Deterministic core: expansion from explicit seed nodes.
TrainValSplit expand_from_seeds(const SpatialGraph& g, const std::vector<std::uint32_t>& seeds,
                                std::uint32_t levels, std::uint32_t buffer);

// Membership lookup helpers.
std::vector<std::uint8_t> split_roles(const SpatialGraph& g, const TrainValSplit& s);
inline constexpr std::uint8_t kRoleTrain = 0, kRoleVal = 1, kRoleBuffer = 2;

}  // namespace scbench

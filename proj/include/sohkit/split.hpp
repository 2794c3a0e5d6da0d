#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/random.hpp"

namespace sohkit {

// Cell-level train/test partition: every cycle of a cell stays on one side.
struct SplitPlan {
  std::vector<std::string> train_cells;
  std::vector<std::string> test_cells;
  std::uint64_t seed = 0;
  double fraction = 0.7;
};

// Seeded uniform shuffle (Fisher-Yates on our deterministic generator); the
// first round(fraction * total) cells train, the rest test. Round-to-nearest
// reproduces the worked splits 8 -> 6/2, 20 -> 14/6, 165 -> 115/50.
inline SplitPlan split_by_cell(std::vector<std::string> cell_ids, double fraction,
                               std::uint64_t seed) {
  if (cell_ids.size() < 2)
    raise(ErrorCode::InsufficientData, "split_by_cell needs at least 2 cells");
  if (!(fraction > 0.0) || !(fraction < 1.0))
    raise(ErrorCode::ConfigError, "split fraction must be inside (0, 1)");

  Rng rng(mix_seed(seed, 0x5B117));
  for (std::size_t i = cell_ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i + 1));
    std::swap(cell_ids[i], cell_ids[j]);
  }
  auto n_train = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(cell_ids.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, cell_ids.size() - 1);

  SplitPlan plan;
  plan.seed = seed;
  plan.fraction = fraction;
  plan.train_cells.assign(cell_ids.begin(),
                          cell_ids.begin() + static_cast<long>(n_train));
  plan.test_cells.assign(cell_ids.begin() + static_cast<long>(n_train),
                         cell_ids.end());
  return plan;
}

}  // namespace sohkit

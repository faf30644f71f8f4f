#pragma once

// Seeded row generators shared across the test binaries. All randomness runs
// through the library's counter-based RNG so every test is reproducible.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gapcount/row.hpp"

namespace testutil {

inline double uniform(std::uint64_t seed, std::uint64_t id, std::uint64_t k, double lo,
                      double hi) {
  return lo + (hi - lo) * gapcount::rng_unit(seed, id, k);
}

// kinds: 0 uniform, 1 gaussian, 2 integer lattice (duplicate gaps, possible
// ties), 3 all-tied
inline gapcount::ScoreRow random_row(std::uint64_t seed, std::uint64_t id,
                                     std::int64_t max_n = 512, bool allow_ties = true) {
  using namespace gapcount;
  const auto n = static_cast<std::int64_t>(
      2 + rng_index(seed, id, 0, static_cast<std::size_t>(max_n - 1)));
  const int kind = static_cast<int>(rng_index(seed, id, 1, allow_ties ? 4 : 2));
  const double scale = uniform(seed, id, 2, 0.5, 25.0);
  const double shift = uniform(seed, id, 3, -100.0, 100.0);
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    const double u = rng_unit(seed, id, 100 + static_cast<std::uint64_t>(j));
    double z;
    switch (kind) {
      case 0: z = scale * (2.0 * u - 1.0); break;
      case 1: {
        const double v = rng_unit(seed, id, 1u << 20 | static_cast<std::uint64_t>(j));
        z = scale * std::sqrt(-2.0 * std::log(u + 1e-300)) *
            std::cos(6.283185307179586476 * v);
        break;
      }
      case 2: z = std::floor(24.0 * u) * 0.25; break;
      default: z = 3.0; break;
    }
    scores[static_cast<std::size_t>(j)] = z + shift;
  }
  return make_row(std::move(scores));
}

inline gapcount::ScoreRow random_nontied_row(std::uint64_t seed, std::uint64_t id,
                                             std::int64_t max_n = 512) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    gapcount::ScoreRow row = random_row(seed, id + (attempt << 40), max_n, false);
    if (gapcount::gap_profile(row).n_max == 1) return row;
  }
}

}  // namespace testutil

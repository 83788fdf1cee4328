#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "modeshift/dataset.hpp"
#include "modeshift/density.hpp"

namespace modeshift {

// KDE value (1/M) sum_m K(z - x_m), optionally leaving one point out.
double kde_value(const DataSet& data, const KdeModel& model,
                 std::span<const double> z,
                 std::optional<std::size_t> exclude_index = std::nullopt);

// Least-squares cross-validation score
//     J(w) = int phat^2  -  (2/M) sum_m phat_{-m}(x_m),
// the constant int p^2 dropped. The squared integral is estimated by Monte
// Carlo: draw mc_samples points from phat itself (uniform data index, then a
// kernel offset) and average phat there. Deterministic given rng_seed; sample
// s uses the substream derive_stream(rng_seed, s), so the estimate does not
// depend on scheduling.
double lscv_score(const DataSet& data, Kernel kernel, double w,
                  std::size_t mc_samples, std::uint64_t rng_seed);

struct BandwidthSearch {
  std::vector<double> candidates;
  std::vector<double> scores;
  double selected_w = 0.0;
  std::size_t mc_samples = 0;
  std::uint64_t rng_seed = 0;
};

// Scores candidate i exactly as lscv_score(..., derive_stream(rng_seed, i))
// and selects the argmin (ties -> smallest w). Candidates must be strictly
// increasing and positive.
BandwidthSearch select_bandwidth(const DataSet& data, Kernel kernel,
                                 std::span<const double> candidates,
                                 std::size_t mc_samples, std::uint64_t rng_seed);

// Data-driven default grid: `count` log-spaced values spanning
// [0.25 * q05, 4 * median] of sampled pairwise distances. The low quantile
// anchors the floor at within-cluster scale even when most pairs straddle
// clusters.
std::vector<double> default_candidate_grid(const DataSet& data,
                                           std::uint64_t rng_seed,
                                           std::size_t count = 24);

inline std::size_t default_mc_samples(const DataSet& data) {
  return 10 * data.size();
}

}  // namespace modeshift

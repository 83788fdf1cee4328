#include "modeshift/deflation.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "modeshift/errors.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/scan.hpp"

namespace modeshift {

double DeflationConfig::bandwidth(std::size_t dim) const {
  if (bandwidth_override) {
    if (!(*bandwidth_override > 0.0))
      throw std::invalid_argument("DeflationConfig: bandwidth override must be positive");
    return *bandwidth_override;
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("DeflationConfig: sigma must be positive");
  return std::sqrt(2.0 * static_cast<double>(dim)) * sigma;
}

ClusterAssignment deflation_cluster(const DataSet& data,
                                    const DeflationConfig& cfg,
                                    std::size_t cap) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = data.size();
  const double w = cfg.bandwidth(data.dim());
  const double w2 = w * w;

  ModeSeekOptions seek;
  seek.bandwidth = w;
  seek.cap = cap;
  seek.boundary_rule = cfg.boundary_rule;
  seek.rng_seed = cfg.rng_seed;
  seek.tau = cfg.tau;

  rng::SplitMix64 pick(rng::derive_stream(cfg.rng_seed, 0x5eedULL));

  ClusterAssignment out;
  out.algorithm_tag = "deflation";
  out.labels.assign(m, -1);

  std::vector<std::size_t> unclaimed(m);
  for (std::size_t i = 0; i < m; ++i) unclaimed[i] = i;
  std::vector<double> d2(m);

  int k = 0;
  while (!unclaimed.empty()) {
    const std::size_t pos =
        cfg.seed_rule == SeedRule::LowestIndex ? 0 : pick.below(unclaimed.size());
    const std::size_t seed_index = unclaimed[pos];

    // The iterates see the full dataset so the density landscape is the same
    // every round; only claiming is restricted to unclaimed points.
    auto [mode, trace] = mode_seek(data, seed_index, seek);
    if (trace.termination == Termination::IterationCapHit)
      throw CapExceededError(seed_index,
                             "deflation_cluster: iteration cap hit at seed " +
                                 std::to_string(seed_index));

    scan::squared_dists(data, mode.mode, d2);
    std::size_t claimed = 0;
    for (std::size_t i : unclaimed)
      if (d2[i] < w2) {
        out.labels[i] = k;
        ++claimed;
      }
    if (claimed == 0)
      throw DeflationStallError(
          "deflation_cluster: round " + std::to_string(k) +
          " claimed no points (overlapping components or wrong sigma)");

    std::vector<std::size_t> rest;
    rest.reserve(unclaimed.size() - claimed);
    for (std::size_t i : unclaimed)
      if (out.labels[i] < 0) rest.push_back(i);
    unclaimed = std::move(rest);
    out.centroids.push_back(std::move(mode.mode));
    ++k;
  }
  out.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double chi_square_tail_bound(double gamma, std::size_t d) {
  if (!(gamma > 1.0))
    throw std::invalid_argument("chi_square_tail_bound: gamma must exceed 1");
  if (d == 0) throw std::invalid_argument("chi_square_tail_bound: d must be positive");
  return std::pow(gamma * std::exp(1.0 - gamma), static_cast<double>(d) / 2.0);
}

}  // namespace modeshift

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "modeshift/dataset.hpp"

namespace modeshift {

// Spherical Gaussian mixture: centroid k ~ N(0, centroid_std^2 I), then
// sizes[k] points ~ N(mu_k, sigma^2 I).
struct GmmSpec {
  std::size_t dim = 1;
  std::size_t components = 1;
  double centroid_std = 2.0;
  double sigma = 1.0;
  std::vector<std::size_t> sizes;
  std::uint64_t rng_seed = 0;
};

struct LabeledData {
  DataSet data;
  std::vector<int> true_labels;  // 0-based, generation order
  std::vector<std::vector<double>> true_centroids;
  double component_sigma = 1.0;
};

// Deterministic given the seed. Draw order is fixed for portability: all
// centroids first (component-major, coordinate-minor), then the points of
// component 0, 1, ... each coordinate-minor, every normal from the
// documented SplitMix64 + Box-Muller stream.
LabeledData generate_gmm(const GmmSpec& spec);

struct SeparationStats {
  double min_centroid_distance;  // +inf for a single component
  bool overlap;                  // min distance <= 2 sqrt(d) sigma
};

SeparationStats separation_stats(const LabeledData& labeled);

}  // namespace modeshift

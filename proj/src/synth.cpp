#include "modeshift/synth.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "modeshift/rng.hpp"

namespace modeshift {

LabeledData generate_gmm(const GmmSpec& spec) {
  if (spec.dim == 0 || spec.components == 0)
    throw std::invalid_argument("generate_gmm: dim and components must be positive");
  if (spec.sizes.size() != spec.components)
    throw std::invalid_argument("generate_gmm: sizes length must equal component count");
  if (!(spec.centroid_std > 0.0) || !(spec.sigma > 0.0))
    throw std::invalid_argument("generate_gmm: centroid_std and sigma must be positive");
  for (std::size_t s : spec.sizes)
    if (s == 0) throw std::invalid_argument("generate_gmm: component sizes must be positive");

  rng::SplitMix64 stream(spec.rng_seed);
  const std::size_t d = spec.dim;

  std::vector<std::vector<double>> centroids(spec.components,
                                             std::vector<double>(d));
  for (auto& mu : centroids)
    for (double& v : mu) v = spec.centroid_std * stream.normal();

  std::size_t total = 0;
  for (std::size_t s : spec.sizes) total += s;

  std::vector<double> flat;
  flat.reserve(total * d);
  std::vector<int> labels;
  labels.reserve(total);
  for (std::size_t k = 0; k < spec.components; ++k) {
    for (std::size_t i = 0; i < spec.sizes[k]; ++i) {
      for (std::size_t c = 0; c < d; ++c)
        flat.push_back(centroids[k][c] + spec.sigma * stream.normal());
      labels.push_back(static_cast<int>(k));
    }
  }

  return LabeledData{DataSet(std::move(flat), d), std::move(labels),
                     std::move(centroids), spec.sigma};
}

SeparationStats separation_stats(const LabeledData& labeled) {
  const auto& mus = labeled.true_centroids;
  if (mus.size() < 2)
    return {std::numeric_limits<double>::infinity(), false};
  const std::size_t d = mus.front().size();
  double best2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mus.size(); ++i)
    for (std::size_t j = i + 1; j < mus.size(); ++j) {
      double s2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = mus[i][k] - mus[j][k];
        s2 += diff * diff;
      }
      if (s2 < best2) best2 = s2;
    }
  const double min_dist = std::sqrt(best2);
  const double threshold =
      2.0 * std::sqrt(static_cast<double>(d)) * labeled.component_sigma;
  return {min_dist, min_dist <= threshold};
}

}  // namespace modeshift

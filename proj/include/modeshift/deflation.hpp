#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "modeshift/assignment.hpp"
#include "modeshift/dataset.hpp"
#include "modeshift/mean_shift.hpp"

namespace modeshift {

enum class SeedRule { LowestIndex, Random };

// One cluster is extracted per round: run the iterates from an unclaimed
// point, then claim every still-unclaimed point inside the mode's bandwidth
// ball. With non-overlapping spherical components of deviation sigma a ball
// of radius sqrt(2 d) sigma captures a component almost surely, which is the
// default bandwidth.
struct DeflationConfig {
  double sigma = 1.0;
  std::optional<double> bandwidth_override;
  SeedRule seed_rule = SeedRule::LowestIndex;
  std::uint64_t rng_seed = 0;
  BoundaryRule boundary_rule = BoundaryRule::LowestIndex;
  double tau = -1.0;

  double bandwidth(std::size_t dim) const;
};

// Throws DeflationStallError if a round claims nothing, CapExceededError if
// an inner run hits its cap. K is discovered, not given.
ClusterAssignment deflation_cluster(const DataSet& data,
                                    const DeflationConfig& cfg,
                                    std::size_t cap = 0);

// Chernoff bound (gamma * e^(1-gamma))^(d/2) on Pr(Y > gamma d) for
// Y ~ chi-square(d); gamma must exceed 1.
double chi_square_tail_bound(double gamma, std::size_t d);

}  // namespace modeshift

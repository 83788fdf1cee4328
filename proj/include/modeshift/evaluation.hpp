#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "modeshift/assignment.hpp"
#include "modeshift/dataset.hpp"
#include "modeshift/synth.hpp"

namespace modeshift {

// Optimal matching between found and true labels plus the resulting error.
// `permutation[f]` is the true label matched to found label f, or -1 when
// K_found exceeds K_true and f went unmatched (all its points count as
// errors).
struct AlignmentResult {
  std::vector<int> permutation;
  double error_ratio = 0.0;
  std::vector<std::vector<std::int64_t>> confusion_counts;  // K_found x K_true
};

// Maximum-weight assignment on a count matrix (Jonker-Volgenant style
// potentials, exact for integer counts; the matrix is padded square
// internally with zero-benefit entries).
AlignmentResult hungarian_align(
    const std::vector<std::vector<std::int64_t>>& counts);

// Confusion counts of assignment vs truth, then hungarian_align.
AlignmentResult score_assignment(const ClusterAssignment& assignment,
                                 const LabeledData& truth);

enum class KmeansInit { PlusPlus, Given };

struct KmeansOptions {
  std::size_t k = 1;
  KmeansInit init = KmeansInit::PlusPlus;
  std::uint64_t rng_seed = 0;
  std::vector<std::vector<double>> given_centroids;  // used when init == Given
  std::size_t max_iter = 100;
  double tol = 0.0;  // stop when max centroid movement <= tol
};

// Lloyd's algorithm. An emptied cluster is re-seeded at the point farthest
// from its nearest centroid.
ClusterAssignment lloyd_kmeans(const DataSet& data, const KmeansOptions& opts);

// Within-cluster sum of squares for a labeling.
double wcss(const DataSet& data, const ClusterAssignment& assignment);

struct EmOptions {
  std::size_t k = 1;
  std::uint64_t rng_seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-8;  // stop on log-likelihood improvement below tol
};

struct EmResult {
  ClusterAssignment assignment;
  std::vector<double> log_likelihood;  // one entry per iteration, non-decreasing
  bool variance_floored = false;
};

// EM for a mixture of spherical Gaussians N(mu_k, var_k I) with mixing
// weights, initialized from lloyd_kmeans. Hard labels by maximum
// responsibility.
EmResult em_spherical_gmm(const DataSet& data, const EmOptions& opts);

}  // namespace modeshift

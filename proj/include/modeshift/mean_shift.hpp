#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "modeshift/assignment.hpp"
#include "modeshift/dataset.hpp"
#include "modeshift/density.hpp"

namespace modeshift {

enum class Termination { Converged, IterationCapHit };

enum class BoundaryRule { LowestIndex, Random };

struct IterateStep {
  std::vector<double> z;
  std::size_t inlier_count;
  double f_value;
  bool boundary_escape;
};

// Per-iteration record of one run. f_value strictly decreases across steps;
// a mean update drops it by at least |I| ||dz||^2 and a boundary escape by
// exactly w^2/(|I|+1).
struct IterateTrace {
  std::vector<IterateStep> steps;
  Termination termination = Termination::Converged;
};

// Terminal point of a run together with its certificate. The mode equals the
// arithmetic mean of the points it indexes, bitwise.
struct ModeResult {
  std::vector<double> mode;
  std::vector<std::size_t> inlier_indices;
  std::size_t iterations = 0;
  StationarityReport certificate;
};

struct ModeSeekOptions {
  double bandwidth = 1.0;
  std::size_t cap = 0;  // 0 -> 10*M + 100
  BoundaryRule boundary_rule = BoundaryRule::LowestIndex;
  std::uint64_t rng_seed = 0;  // used only by BoundaryRule::Random
  double tau = -1.0;           // <0 -> default_boundary_tau(bandwidth)
};

// Mode seeking from one data point. The update is the mean of the current
// inlier ball; a fixed point is detected by index-set equality (the mean of a
// fixed subset is reproducible bitwise, so no vector tolerance is needed).
// A fixed point with points exactly on the sphere is not a local minimum;
// the escape re-update averages one such point in and strictly decreases the
// loss, so the run can never stall off a mode.
std::pair<ModeResult, IterateTrace> mode_seek(const DataSet& data,
                                              std::size_t seed_index,
                                              const ModeSeekOptions& opts);

struct MeanShiftOptions {
  double bandwidth = 1.0;
  double merge_eps = -1.0;  // <0 -> 1e-6 * bandwidth
  std::size_t cap = 0;
  BoundaryRule boundary_rule = BoundaryRule::LowestIndex;
  std::uint64_t rng_seed = 0;
  double tau = -1.0;
};

// Runs mode_seek from every data point (in parallel; runs are independent)
// and merges terminal modes within merge_eps by single linkage. Labels follow
// first-seed order. Throws CapExceededError if any run hits the cap.
// When `traces` is nonnull, the per-seed traces are collected into it.
ClusterAssignment mean_shift_cluster(const DataSet& data,
                                     const MeanShiftOptions& opts,
                                     std::vector<IterateTrace>* traces = nullptr);

// Exact-duplicate grouping followed by single-linkage union of terminal
// modes within merge_eps. Labels and centroid order follow first appearance.
ClusterAssignment merge_modes(const std::vector<std::vector<double>>& modes,
                              double merge_eps, std::string algorithm_tag);

// Gaussian-profile variant: z <- weighted mean with weights
// exp(-||z - x_m||^2 / 2w^2). Converges only asymptotically, so it stops on
// ||z_new - z|| <= tol; no certificate is possible.
std::pair<std::vector<double>, std::size_t> gaussian_mode_seek(
    const DataSet& data, std::size_t seed_index, double w, double tol,
    std::size_t cap);

// Gaussian-profile runs from every point, merged like mean_shift_cluster.
// The stop tolerance makes merge_eps necessarily coarser (default 1e-3 w).
ClusterAssignment gaussian_ms_cluster(const DataSet& data, double w, double tol,
                                      double merge_eps = -1.0,
                                      std::size_t cap = 0);

inline constexpr double kNoDistinctPair = std::numeric_limits<double>::infinity();

// Smallest squared distance between means of distinct point subsets whose
// minimum enclosing ball has radius <= w. Every iterate of mode_seek is such
// a mean, so (f(z0) - f(zT)) / lambda bounds the number of moving steps.
// Exponential in M; restricted to M <= 15.
struct MeanGapResult {
  double lambda = kNoDistinctPair;  // +inf when no distinct pair exists
  bool degenerate = false;  // two distinct subsets share a mean exactly
};

MeanGapResult min_subset_mean_gap(const DataSet& data, double w);

}  // namespace modeshift

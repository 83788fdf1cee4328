#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modeshift/assignment.hpp"
#include "modeshift/dataset.hpp"

// Straight-line serial implementations kept alongside the optimized kernels.
// They use the naive difference-and-square distance (no norm expansion, no
// threading) and are the comparison baseline for the test suite and the
// kernel benchmark.
namespace modeshift::reference {

double squared_dist(std::span<const double> a, std::span<const double> b);

double epanechnikov_loss(const DataSet& data, std::span<const double> z, double w);

std::vector<std::size_t> inliers(const DataSet& data, std::span<const double> z,
                                 double w);

double kde_value(const DataSet& data, bool gaussian, double w,
                 std::span<const double> z);

// Serial transliteration of the full per-seed procedure (fixed-point
// detection by index-set equality, lowest-index boundary escape) and of the
// one-cluster-per-round variant.
std::vector<double> mode_seek(const DataSet& data, std::size_t seed_index,
                              double w, std::size_t cap);

ClusterAssignment mean_shift_cluster(const DataSet& data, double w,
                                     double merge_eps, std::size_t cap);

ClusterAssignment deflation_cluster(const DataSet& data, double w,
                                    std::size_t cap);

}  // namespace modeshift::reference

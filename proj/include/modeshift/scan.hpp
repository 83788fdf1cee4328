#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modeshift/dataset.hpp"

namespace modeshift::scan {

// Dot product with four fixed accumulator lanes. The grouping is part of the
// contract: results are identical on every run and thread count, and the
// independent lanes let the compiler emit SIMD FMAs without -ffast-math.
inline double dot(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return dot(a.data(), b.data(), a.size());
}

inline double sq_norm(std::span<const double> v) { return dot(v, v); }

// out[i] = ||x_i - z||^2, expanded as ||x_i||^2 - 2 x_i.z + ||z||^2 with the
// precomputed point norms, clamped at zero. Parallel over points; each entry
// is written independently, so the output is thread-count invariant.
void squared_dists(const DataSet& data, std::span<const double> z,
                   std::span<double> out);

// Sum of min(d2[i], w2) in index order (fixed summation order).
double loss_from_dists(std::span<const double> d2, double w2);

// Mean of the points selected by `indices`, accumulated in index order.
std::vector<double> mean_of(const DataSet& data,
                            std::span<const std::size_t> indices);

// Indices with d2[i] < threshold, ascending.
std::vector<std::size_t> indices_below(std::span<const double> d2,
                                       double threshold);

}  // namespace modeshift::scan

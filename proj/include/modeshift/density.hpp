#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "modeshift/dataset.hpp"

namespace modeshift {

enum class Kernel { Epanechnikov, Gaussian };

// Kernel family, bandwidth and the constant that makes the kernel integrate
// to one over R^d:
//   Epanechnikov: c = (d+2) / (2 V_d),  V_d the unit-ball volume
//   Gaussian:     c = (2 pi)^(-d/2)
// The kernel value at offset u is (c / w^d) * profile(||u||^2 / w^2).
struct KdeModel {
  Kernel kernel;
  double bandwidth;
  double norm_const;
  std::size_t dim;

  static KdeModel make(Kernel kernel, double bandwidth, std::size_t dim);
};

double unit_ball_volume(std::size_t dim);

// Default tolerance for deciding that ||x_j - z||^2 ties with w^2. Relative;
// exact ties produced by means of small-integer data are caught without
// flagging points that merely pass near the sphere.
inline double default_boundary_tau(double w) { return 1e-12 * w * w; }

// min(||v||^2, w^2). The per-point term of the loss below.
double clipped_sqnorm(std::span<const double> v, double w);

// Sum of clipped squared distances from z to every data point. Modes of the
// Epanechnikov KDE are exactly the local minima of this function.
double epanechnikov_loss(const DataSet& data, std::span<const double> z, double w);

// Partition of the data relative to the ball of radius w at z:
//   inliers:  ||x_i - z||^2 <  w^2 - tau
//   boundary: |  ||x_j - z||^2 - w^2 | <= tau
// Anything else is strictly outside. Index vectors are ascending.
struct NeighborSplit {
  std::vector<std::size_t> inliers;
  std::vector<std::size_t> boundary;
  double tau = 0.0;
};

NeighborSplit classify_neighbors(const DataSet& data, std::span<const double> z,
                                 double w, double tau);

// Split an already computed distance array (same thresholds as above).
NeighborSplit split_from_dists(std::span<const double> d2, double w, double tau);

// Gradient 2 * sum_{i in I(z)} (z - x_i), valid only at smooth points.
// Throws NonSmoothPointError (naming the offending index) if some data point
// lies exactly on the bandwidth sphere.
std::vector<double> loss_gradient(const DataSet& data, std::span<const double> z,
                                  double w);

// The Hessian at a smooth point is 2|I(z)| times the identity; only the
// scalar is worth returning.
double hessian_scale(const DataSet& data, std::span<const double> z, double w);

// One-sided derivative along delta. Inlier terms always contribute; a point
// exactly on the sphere contributes only when the step moves it inward,
// i.e. (z - x_j)'delta < 0.
double directional_derivative(const DataSet& data, std::span<const double> z,
                              std::span<const double> delta, double w);

enum class Stationarity {
  LocalMin,
  NonSmoothNotStationary,
  SmoothNotStationary,
  EmptyInlierGlobalMax,
};

// Certificate for a query point:
//  - boundary nonempty       -> NonSmoothNotStationary, with a constructed
//                               strict descent direction
//  - smooth, I nonempty, z equals the mean of I (bitwise, recomputed in
//    index order)            -> LocalMin
//  - smooth, I empty         -> EmptyInlierGlobalMax (loss at its maximum)
//  - otherwise               -> SmoothNotStationary, descent = -gradient
struct StationarityReport {
  bool is_smooth_point = false;
  std::vector<double> gradient;
  std::optional<std::vector<double>> descent_direction;
  bool is_local_minimum = false;
  Stationarity certificate = Stationarity::SmoothNotStationary;
};

StationarityReport stationarity_report(const DataSet& data,
                                       std::span<const double> z, double w,
                                       double tau);

}  // namespace modeshift

#include "modeshift/density.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "modeshift/errors.hpp"
#include "modeshift/scan.hpp"

namespace modeshift {

namespace {

void check_finite(std::span<const double> v, const char* who) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

void check_dim(const DataSet& data, std::span<const double> z, const char* who) {
  if (z.size() != data.dim())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  check_finite(z, who);
}

void check_bandwidth(double w, const char* who) {
  if (!(w > 0.0) || !std::isfinite(w))
    throw std::invalid_argument(std::string(who) + ": bandwidth must be positive");
}

}  // namespace

double unit_ball_volume(std::size_t dim) {
  const double d = static_cast<double>(dim);
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

KdeModel KdeModel::make(Kernel kernel, double bandwidth, std::size_t dim) {
  check_bandwidth(bandwidth, "KdeModel");
  if (dim == 0) throw std::invalid_argument("KdeModel: dim must be positive");
  double c = 0.0;
  switch (kernel) {
    case Kernel::Epanechnikov:
      c = (static_cast<double>(dim) + 2.0) / (2.0 * unit_ball_volume(dim));
      break;
    case Kernel::Gaussian:
      c = std::pow(2.0 * std::numbers::pi, -static_cast<double>(dim) / 2.0);
      break;
  }
  return {kernel, bandwidth, c, dim};
}

double clipped_sqnorm(std::span<const double> v, double w) {
  check_bandwidth(w, "clipped_sqnorm");
  check_finite(v, "clipped_sqnorm");
  const double n2 = scan::sq_norm(v);
  const double w2 = w * w;
  return n2 < w2 ? n2 : w2;
}

double epanechnikov_loss(const DataSet& data, std::span<const double> z, double w) {
  check_dim(data, z, "epanechnikov_loss");
  check_bandwidth(w, "epanechnikov_loss");
  std::vector<double> d2(data.size());
  scan::squared_dists(data, z, d2);
  return scan::loss_from_dists(d2, w * w);
}

NeighborSplit split_from_dists(std::span<const double> d2, double w, double tau) {
  const double w2 = w * w;
  NeighborSplit out;
  out.tau = tau;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    if (d2[i] < w2 - tau)
      out.inliers.push_back(i);
    else if (std::abs(d2[i] - w2) <= tau)
      out.boundary.push_back(i);
  }
  return out;
}

NeighborSplit classify_neighbors(const DataSet& data, std::span<const double> z,
                                 double w, double tau) {
  check_dim(data, z, "classify_neighbors");
  check_bandwidth(w, "classify_neighbors");
  if (!(tau >= 0.0) || tau >= 0.01 * w * w)
    throw std::invalid_argument("classify_neighbors: need 0 <= tau < 0.01 w^2");
  std::vector<double> d2(data.size());
  scan::squared_dists(data, z, d2);
  return split_from_dists(d2, w, tau);
}

std::vector<double> loss_gradient(const DataSet& data, std::span<const double> z,
                                  double w) {
  check_dim(data, z, "loss_gradient");
  check_bandwidth(w, "loss_gradient");
  std::vector<double> d2(data.size());
  scan::squared_dists(data, z, d2);
  const double w2 = w * w;
  const std::size_t d = data.dim();
  std::vector<double> g(d, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (d2[i] == w2)
      throw NonSmoothPointError(
          i, "loss_gradient: non-smooth point, data index " + std::to_string(i) +
                 " lies exactly on the bandwidth sphere");
    if (d2[i] < w2) {
      const double* p = data.flat().data() + i * d;
      for (std::size_t k = 0; k < d; ++k) g[k] += 2.0 * (z[k] - p[k]);
    }
  }
  return g;
}

double hessian_scale(const DataSet& data, std::span<const double> z, double w) {
  check_dim(data, z, "hessian_scale");
  check_bandwidth(w, "hessian_scale");
  std::vector<double> d2(data.size());
  scan::squared_dists(data, z, d2);
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (d2[i] == w * w)
      throw NonSmoothPointError(
          i, "hessian_scale: non-smooth point, data index " + std::to_string(i));
    if (d2[i] < w * w) ++count;
  }
  return 2.0 * static_cast<double>(count);
}

double directional_derivative(const DataSet& data, std::span<const double> z,
                              std::span<const double> delta, double w) {
  check_dim(data, z, "directional_derivative");
  check_bandwidth(w, "directional_derivative");
  if (delta.size() != data.dim())
    throw std::invalid_argument("directional_derivative: delta dimension mismatch");
  check_finite(delta, "directional_derivative");
  if (scan::sq_norm(delta) == 0.0)
    throw std::invalid_argument("directional_derivative: delta must be nonzero");

  std::vector<double> d2(data.size());
  scan::squared_dists(data, z, d2);
  const double w2 = w * w;
  const std::size_t d = data.dim();
  double acc = 0.0;
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (d2[i] > w2) continue;
    const double* p = data.flat().data() + i * d;
    for (std::size_t k = 0; k < d; ++k) diff[k] = z[k] - p[k];
    const double proj = scan::dot(diff, delta);
    if (d2[i] < w2)
      acc += 2.0 * proj;
    else if (proj < 0.0)  // on the sphere, moving inward
      acc += 2.0 * proj;
  }
  return acc;
}

StationarityReport stationarity_report(const DataSet& data,
                                       std::span<const double> z, double w,
                                       double tau) {
  check_dim(data, z, "stationarity_report");
  check_bandwidth(w, "stationarity_report");
  const NeighborSplit split = classify_neighbors(data, z, w, tau);
  const std::size_t d = data.dim();

  StationarityReport rep;
  rep.gradient.assign(d, 0.0);
  for (std::size_t idx : split.inliers) {
    const double* p = data.flat().data() + idx * d;
    for (std::size_t k = 0; k < d; ++k) rep.gradient[k] += 2.0 * (z[k] - p[k]);
  }

  if (!split.boundary.empty()) {
    rep.is_smooth_point = false;
    rep.certificate = Stationarity::NonSmoothNotStationary;
    // Strict descent always exists at a non-smooth point. Use the inlier pull
    // when it is nonzero, else step toward the lowest-index boundary point.
    std::vector<double> delta(d, 0.0);
    bool nonzero = false;
    for (std::size_t k = 0; k < d; ++k) {
      delta[k] = -0.5 * rep.gradient[k];
      if (delta[k] != 0.0) nonzero = true;
    }
    if (!nonzero) {
      const double* p = data.flat().data() + split.boundary.front() * d;
      for (std::size_t k = 0; k < d; ++k) delta[k] = -(z[k] - p[k]);
    }
    rep.descent_direction = std::move(delta);
    return rep;
  }

  rep.is_smooth_point = true;
  if (split.inliers.empty()) {
    rep.certificate = Stationarity::EmptyInlierGlobalMax;
    return rep;
  }

  // Local minimum iff z reproduces the inlier mean exactly. The mean is
  // accumulated in index order, matching the iterate update, so a returned
  // mode compares bitwise equal.
  const std::vector<double> mean = scan::mean_of(data, split.inliers);
  bool at_mean = true;
  for (std::size_t k = 0; k < d; ++k)
    if (mean[k] != z[k]) { at_mean = false; break; }

  if (at_mean) {
    rep.is_local_minimum = true;
    rep.certificate = Stationarity::LocalMin;
  } else {
    rep.certificate = Stationarity::SmoothNotStationary;
    std::vector<double> delta(d);
    for (std::size_t k = 0; k < d; ++k) delta[k] = -rep.gradient[k];
    rep.descent_direction = std::move(delta);
  }
  return rep;
}

}  // namespace modeshift

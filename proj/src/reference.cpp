#include "modeshift/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "modeshift/errors.hpp"

namespace modeshift::reference {

double squared_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

double epanechnikov_loss(const DataSet& data, std::span<const double> z, double w) {
  const double w2 = w * w;
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    s += std::min(squared_dist(data.point(i), z), w2);
  return s;
}

std::vector<std::size_t> inliers(const DataSet& data, std::span<const double> z,
                                 double w) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (squared_dist(data.point(i), z) < w * w) out.push_back(i);
  return out;
}

double kde_value(const DataSet& data, bool gaussian, double w,
                 std::span<const double> z) {
  const std::size_t d = data.dim();
  const double dd = static_cast<double>(d);
  double c;
  if (gaussian) {
    c = std::pow(2.0 * std::numbers::pi_v<double>, -dd / 2.0);
  } else {
    const double vd = std::pow(std::numbers::pi_v<double>, dd / 2.0) /
                      std::tgamma(dd / 2.0 + 1.0);
    c = (dd + 2.0) / (2.0 * vd);
  }
  const double c_over_wd = c / std::pow(w, dd);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d2 = squared_dist(data.point(i), z);
    if (gaussian)
      acc += c_over_wd * std::exp(-d2 / (2.0 * w * w));
    else
      acc += c_over_wd * std::max(1.0 - d2 / (w * w), 0.0);
  }
  return acc / static_cast<double>(data.size());
}

namespace {

std::vector<double> mean_of(const DataSet& data,
                            const std::vector<std::size_t>& idx) {
  const std::size_t d = data.dim();
  std::vector<double> acc(d, 0.0);
  for (std::size_t i : idx)
    for (std::size_t k = 0; k < d; ++k) acc[k] += data.point(i)[k];
  for (double& v : acc) v /= static_cast<double>(idx.size());
  return acc;
}

}  // namespace

std::vector<double> mode_seek(const DataSet& data, std::size_t seed_index,
                              double w, std::size_t cap) {
  const double w2 = w * w;
  const double tau = 1e-12 * w2;
  if (cap == 0) cap = 10 * data.size() + 100;

  std::vector<double> z(data.point(seed_index).begin(),
                        data.point(seed_index).end());
  std::vector<std::size_t> in = inliers(data, z, w);
  for (std::size_t iter = 0; iter < cap; ++iter) {
    std::vector<double> z_next = mean_of(data, in);
    std::vector<std::size_t> next = inliers(data, z_next, w);
    if (next != in) {
      z = std::move(z_next);
      in = std::move(next);
      continue;
    }
    z = std::move(z_next);
    std::vector<std::size_t> bnd;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (std::abs(squared_dist(data.point(i), z) - w2) <= tau) bnd.push_back(i);
    if (bnd.empty()) return z;
    const std::size_t j = bnd.front();
    std::vector<double> esc(data.dim(), 0.0);
    for (std::size_t i : in)
      for (std::size_t k = 0; k < data.dim(); ++k) esc[k] += data.point(i)[k];
    for (std::size_t k = 0; k < data.dim(); ++k)
      esc[k] = (esc[k] + data.point(j)[k]) / static_cast<double>(in.size() + 1);
    z = std::move(esc);
    in = inliers(data, z, w);
  }
  throw CapExceededError(seed_index, "reference::mode_seek: cap hit");
}

ClusterAssignment mean_shift_cluster(const DataSet& data, double w,
                                     double merge_eps, std::size_t cap) {
  const std::size_t m = data.size();
  std::vector<std::vector<double>> modes(m);
  for (std::size_t s = 0; s < m; ++s) modes[s] = mode_seek(data, s, w, cap);

  ClusterAssignment out;
  out.algorithm_tag = "meanshift-reference";
  out.labels.assign(m, -1);
  for (std::size_t s = 0; s < m; ++s) {
    int label = -1;
    for (std::size_t c = 0; c < out.centroids.size(); ++c)
      if (squared_dist(out.centroids[c], modes[s]) <= merge_eps * merge_eps) {
        label = static_cast<int>(c);
        break;
      }
    if (label < 0) {
      label = static_cast<int>(out.centroids.size());
      out.centroids.push_back(modes[s]);
    }
    out.labels[s] = label;
  }
  return out;
}

ClusterAssignment deflation_cluster(const DataSet& data, double w,
                                    std::size_t cap) {
  const std::size_t m = data.size();
  const double w2 = w * w;
  ClusterAssignment out;
  out.algorithm_tag = "deflation-reference";
  out.labels.assign(m, -1);
  int k = 0;
  for (;;) {
    std::size_t seed = m;
    for (std::size_t i = 0; i < m; ++i)
      if (out.labels[i] < 0) {
        seed = i;
        break;
      }
    if (seed == m) break;
    const std::vector<double> mode = mode_seek(data, seed, w, cap);
    std::size_t claimed = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (out.labels[i] < 0 && squared_dist(data.point(i), mode) < w2) {
        out.labels[i] = k;
        ++claimed;
      }
    if (claimed == 0)
      throw DeflationStallError("reference::deflation_cluster: round " +
                                std::to_string(k) + " claimed nothing");
    out.centroids.push_back(mode);
    ++k;
  }
  return out;
}

}  // namespace modeshift::reference

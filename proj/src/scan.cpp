#include "modeshift/scan.hpp"

#include <algorithm>
#include <stdexcept>

namespace modeshift::scan {

void squared_dists(const DataSet& data, std::span<const double> z,
                   std::span<double> out) {
  if (z.size() != data.dim())
    throw std::invalid_argument("squared_dists: dimension mismatch");
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  if (out.size() != m) throw std::invalid_argument("squared_dists: bad output size");
  const double zz = sq_norm(z);
  const double* flat = data.flat().data();
  const double* norms = data.sq_norms().data();
  const double* zp = z.data();
  double* o = out.data();
#pragma omp parallel for schedule(static) if (m * d > 4096)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    const double v = norms[i] - 2.0 * dot(flat + i * d, zp, d) + zz;
    o[i] = v > 0.0 ? v : 0.0;
  }
}

double loss_from_dists(std::span<const double> d2, double w2) {
  double s = 0.0;
  for (double v : d2) s += v < w2 ? v : w2;
  return s;
}

std::vector<double> mean_of(const DataSet& data,
                            std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("mean_of: empty index set");
  const std::size_t d = data.dim();
  std::vector<double> acc(d, 0.0);
  for (std::size_t idx : indices) {
    const double* p = data.flat().data() + idx * d;
    for (std::size_t k = 0; k < d; ++k) acc[k] += p[k];
  }
  const double n = static_cast<double>(indices.size());
  for (double& v : acc) v /= n;
  return acc;
}

std::vector<std::size_t> indices_below(std::span<const double> d2,
                                       double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d2.size(); ++i)
    if (d2[i] < threshold) out.push_back(i);
  return out;
}

}  // namespace modeshift::scan

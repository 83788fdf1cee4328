#include "modeshift/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "modeshift/rng.hpp"
#include "modeshift/scan.hpp"

namespace modeshift {

namespace {

double kernel_from_d2(Kernel kernel, double d2, double w, double c_over_wd) {
  if (kernel == Kernel::Epanechnikov) {
    const double t = 1.0 - d2 / (w * w);
    return t > 0.0 ? c_over_wd * t : 0.0;
  }
  return c_over_wd * std::exp(-d2 / (2.0 * w * w));
}

// Offset drawn from the kernel centered at the origin. Epanechnikov: uniform
// proposal in the w-ball (gaussian direction, radius w * U^(1/d)), accepted
// with weight (1 - r^2). Gaussian: w times a standard normal per coordinate.
void sample_kernel_offset(Kernel kernel, double w, std::size_t d,
                          rng::SplitMix64& stream, std::vector<double>& out) {
  out.resize(d);
  if (kernel == Kernel::Gaussian) {
    for (std::size_t k = 0; k < d; ++k) out[k] = w * stream.normal();
    return;
  }
  for (;;) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      out[k] = stream.normal();
      n2 += out[k] * out[k];
    }
    if (n2 == 0.0) continue;
    const double r = std::pow(stream.unit(), 1.0 / static_cast<double>(d));
    if (stream.unit() < 1.0 - r * r) {
      const double scale = w * r / std::sqrt(n2);
      for (std::size_t k = 0; k < d; ++k) out[k] *= scale;
      return;
    }
  }
}

// phat at z via the norms expansion; serial (called from parallel loops).
double kde_at(const DataSet& data, Kernel kernel, double w, double c_over_wd,
              std::span<const double> z) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const double zz = scan::sq_norm(z);
  const double* flat = data.flat().data();
  const double* norms = data.sq_norms().data();
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double d2 = norms[j] - 2.0 * scan::dot(flat + j * d, z.data(), d) + zz;
    if (d2 < 0.0) d2 = 0.0;
    acc += kernel_from_d2(kernel, d2, w, c_over_wd);
  }
  return acc / static_cast<double>(m);
}

// Leave-one-out means (1/M) sum_m phat_{-m}(x_m) for every candidate in one
// pass over the pairwise distances. Scoring one candidate through this path
// is bit-identical to scoring it alone: per-candidate accumulation runs in
// the same j order either way.
std::vector<double> loo_means(const DataSet& data, Kernel kernel,
                              std::span<const double> ws) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const std::size_t c = ws.size();
  std::vector<double> c_over_wd(c);
  for (std::size_t i = 0; i < c; ++i) {
    const KdeModel model = KdeModel::make(kernel, ws[i], d);
    c_over_wd[i] = model.norm_const / std::pow(ws[i], static_cast<double>(d));
  }
  const double* flat = data.flat().data();
  const double* norms = data.sq_norms().data();
  std::vector<double> per_point(m * c, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    double* acc = per_point.data() + i * c;
    const double* xi = flat + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      double d2 = norms[j] - 2.0 * scan::dot(flat + j * d, xi, d) + norms[i];
      if (d2 < 0.0) d2 = 0.0;
      for (std::size_t k = 0; k < c; ++k)
        acc[k] += kernel_from_d2(kernel, d2, ws[k], c_over_wd[k]);
    }
  }
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < c; ++k) out[k] += per_point[i * c + k];
  const double denom = static_cast<double>(m) * static_cast<double>(m - 1);
  for (double& v : out) v /= denom;
  return out;
}

double mc_sq_integral(const DataSet& data, Kernel kernel, double w,
                      std::size_t mc_samples, std::uint64_t seed) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const KdeModel model = KdeModel::make(kernel, w, d);
  const double c_over_wd =
      model.norm_const / std::pow(w, static_cast<double>(d));
  std::vector<double> vals(mc_samples);
#pragma omp parallel
  {
    std::vector<double> z(d), offset(d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(mc_samples); ++s) {
      rng::SplitMix64 stream(rng::derive_stream(seed, static_cast<std::uint64_t>(s)));
      const std::size_t idx = stream.below(m);
      sample_kernel_offset(kernel, w, d, stream, offset);
      const double* p = data.flat().data() + idx * d;
      for (std::size_t k = 0; k < d; ++k) z[k] = p[k] + offset[k];
      vals[s] = kde_at(data, kernel, w, c_over_wd, z);
    }
  }
  double acc = 0.0;
  for (double v : vals) acc += v;
  return acc / static_cast<double>(mc_samples);
}

}  // namespace

double kde_value(const DataSet& data, const KdeModel& model,
                 std::span<const double> z,
                 std::optional<std::size_t> exclude_index) {
  if (z.size() != data.dim() || model.dim != data.dim())
    throw std::invalid_argument("kde_value: dimension mismatch");
  const std::size_t m = data.size();
  if (exclude_index && m < 2)
    throw std::invalid_argument("kde_value: cannot exclude from a single point");
  if (exclude_index && *exclude_index >= m)
    throw std::invalid_argument("kde_value: exclude index out of range");
  const double w = model.bandwidth;
  const double c_over_wd =
      model.norm_const / std::pow(w, static_cast<double>(model.dim));
  std::vector<double> d2(m);
  scan::squared_dists(data, z, d2);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (exclude_index && j == *exclude_index) continue;
    acc += kernel_from_d2(model.kernel, d2[j], w, c_over_wd);
  }
  return acc / static_cast<double>(m - (exclude_index ? 1 : 0));
}

double lscv_score(const DataSet& data, Kernel kernel, double w,
                  std::size_t mc_samples, std::uint64_t rng_seed) {
  if (data.size() < 2) throw std::invalid_argument("lscv_score: need at least 2 points");
  if (!(w > 0.0)) throw std::invalid_argument("lscv_score: bandwidth must be positive");
  if (mc_samples == 0) throw std::invalid_argument("lscv_score: mc_samples must be positive");
  const double ws[1] = {w};
  const double loo = loo_means(data, kernel, ws)[0];
  const double sq = mc_sq_integral(data, kernel, w, mc_samples, rng_seed);
  return sq - 2.0 * loo;
}

BandwidthSearch select_bandwidth(const DataSet& data, Kernel kernel,
                                 std::span<const double> candidates,
                                 std::size_t mc_samples, std::uint64_t rng_seed) {
  if (candidates.empty())
    throw std::invalid_argument("select_bandwidth: need at least one candidate");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i] > 0.0))
      throw std::invalid_argument("select_bandwidth: candidates must be positive");
    if (i > 0 && !(candidates[i] > candidates[i - 1]))
      throw std::invalid_argument("select_bandwidth: candidates must be strictly increasing");
  }
  BandwidthSearch out;
  out.candidates.assign(candidates.begin(), candidates.end());
  out.mc_samples = mc_samples;
  out.rng_seed = rng_seed;

  const std::vector<double> loo = loo_means(data, kernel, candidates);
  out.scores.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double sq = mc_sq_integral(data, kernel, candidates[i], mc_samples,
                                     rng::derive_stream(rng_seed, i));
    out.scores[i] = sq - 2.0 * loo[i];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.scores.size(); ++i)
    if (out.scores[i] < out.scores[best]) best = i;
  out.selected_w = out.candidates[best];
  return out;
}

std::vector<double> default_candidate_grid(const DataSet& data,
                                           std::uint64_t rng_seed,
                                           std::size_t count) {
  if (data.size() < 2)
    throw std::invalid_argument("default_candidate_grid: need at least 2 points");
  if (count < 2) throw std::invalid_argument("default_candidate_grid: count must be >= 2");
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  rng::SplitMix64 stream(rng::derive_stream(rng_seed, 0x9B1DULL));
  const std::size_t pairs = 2000;
  std::vector<double> dist;
  dist.reserve(pairs);
  const double* flat = data.flat().data();
  const double* norms = data.sq_norms().data();
  while (dist.size() < pairs) {
    const std::size_t i = stream.below(m);
    const std::size_t j = stream.below(m);
    if (i == j) continue;
    double d2 = norms[i] - 2.0 * scan::dot(flat + i * d, flat + j * d, d) + norms[j];
    if (d2 < 0.0) d2 = 0.0;
    dist.push_back(std::sqrt(d2));
  }
  std::sort(dist.begin(), dist.end());
  const double q05 = dist[dist.size() / 20];
  const double med = dist[dist.size() / 2];
  if (!(q05 > 0.0) || !(med > 0.0))
    throw std::invalid_argument("default_candidate_grid: data has zero spread");
  const double lo = 0.25 * q05;
  const double hi = 4.0 * med;
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

}  // namespace modeshift

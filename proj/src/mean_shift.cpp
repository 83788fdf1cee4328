#include "modeshift/mean_shift.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "modeshift/errors.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/scan.hpp"

namespace modeshift {

namespace {

std::size_t default_cap(std::size_t m, std::size_t cap) {
  return cap != 0 ? cap : 10 * m + 100;
}

struct RunOutput {
  std::vector<double> mode;
  std::vector<std::size_t> inliers;
  std::size_t steps = 0;
  Termination termination = Termination::Converged;
};

// Inliers at tolerance tau; if the band swallowed every inlier (possible only
// on adversarial ties), refit at tau = 0, which cannot be empty along a run
// started at a data point.
std::vector<std::size_t> inliers_of(std::span<const double> d2, double w2,
                                    double tau) {
  std::vector<std::size_t> idx = scan::indices_below(d2, w2 - tau);
  if (idx.empty()) idx = scan::indices_below(d2, w2);
  return idx;
}

std::vector<std::size_t> boundary_of(std::span<const double> d2, double w2,
                                     double tau) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d2.size(); ++i)
    if (std::abs(d2[i] - w2) <= tau) idx.push_back(i);
  return idx;
}

RunOutput run_iterates(const DataSet& data, std::size_t seed_index,
                       const ModeSeekOptions& opts, IterateTrace* trace) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  if (seed_index >= m) throw std::invalid_argument("mode_seek: seed index out of range");
  if (!(opts.bandwidth > 0.0)) throw std::invalid_argument("mode_seek: bandwidth must be positive");
  const double w2 = opts.bandwidth * opts.bandwidth;
  const double tau = opts.tau < 0.0 ? default_boundary_tau(opts.bandwidth) : opts.tau;
  const std::size_t cap = default_cap(m, opts.cap);

  rng::SplitMix64 pick_stream(rng::derive_stream(opts.rng_seed, seed_index));

  RunOutput out;
  std::vector<double> d2(m);
  std::vector<double> z(data.point(seed_index).begin(), data.point(seed_index).end());

  const auto record = [&](const std::vector<double>& at, std::size_t count,
                          bool escape) {
    ++out.steps;
    if (trace != nullptr)
      trace->steps.push_back({at, count, scan::loss_from_dists(d2, w2), escape});
  };

  scan::squared_dists(data, z, d2);
  std::vector<std::size_t> inliers = inliers_of(d2, w2, tau);
  record(z, inliers.size(), false);

  for (std::size_t iter = 0; iter < cap; ++iter) {
    std::vector<double> z_next = scan::mean_of(data, inliers);
    scan::squared_dists(data, z_next, d2);
    std::vector<std::size_t> next = inliers_of(d2, w2, tau);

    if (next != inliers) {
      record(z_next, next.size(), false);
      z = std::move(z_next);
      inliers = std::move(next);
      continue;
    }

    // Fixed point: the mean of `inliers` reproduces its own inlier set.
    if (z_next != z) record(z_next, next.size(), false);
    z = std::move(z_next);
    const std::vector<std::size_t> bnd = boundary_of(d2, w2, tau);
    if (bnd.empty()) {
      out.mode = std::move(z);
      out.inliers = std::move(next);
      out.termination = Termination::Converged;
      if (trace != nullptr) trace->termination = Termination::Converged;
      return out;
    }

    const std::size_t j = opts.boundary_rule == BoundaryRule::LowestIndex
                              ? bnd.front()
                              : bnd[pick_stream.below(bnd.size())];
    std::vector<double> esc(d, 0.0);
    for (std::size_t idx : inliers) {
      const double* p = data.flat().data() + idx * d;
      for (std::size_t k = 0; k < d; ++k) esc[k] += p[k];
    }
    {
      const double* pj = data.flat().data() + j * d;
      const double n = static_cast<double>(inliers.size() + 1);
      for (std::size_t k = 0; k < d; ++k) esc[k] = (esc[k] + pj[k]) / n;
    }
    scan::squared_dists(data, esc, d2);
    std::vector<std::size_t> after = inliers_of(d2, w2, tau);
    record(esc, after.size(), true);
    z = std::move(esc);
    inliers = std::move(after);
  }

  out.mode = std::move(z);
  out.inliers = std::move(inliers);
  out.termination = Termination::IterationCapHit;
  if (trace != nullptr) trace->termination = Termination::IterationCapHit;
  return out;
}

}  // namespace

std::pair<ModeResult, IterateTrace> mode_seek(const DataSet& data,
                                              std::size_t seed_index,
                                              const ModeSeekOptions& opts) {
  IterateTrace trace;
  RunOutput run = run_iterates(data, seed_index, opts, &trace);
  const double tau =
      opts.tau < 0.0 ? default_boundary_tau(opts.bandwidth) : opts.tau;
  ModeResult result;
  result.mode = std::move(run.mode);
  result.inlier_indices = std::move(run.inliers);
  result.iterations = run.steps;
  result.certificate = stationarity_report(data, result.mode, opts.bandwidth, tau);
  return {std::move(result), std::move(trace)};
}

ClusterAssignment mean_shift_cluster(const DataSet& data,
                                     const MeanShiftOptions& opts,
                                     std::vector<IterateTrace>* traces) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = data.size();
  const double merge_eps =
      opts.merge_eps < 0.0 ? 1e-6 * opts.bandwidth : opts.merge_eps;

  ModeSeekOptions seek;
  seek.bandwidth = opts.bandwidth;
  seek.cap = opts.cap;
  seek.boundary_rule = opts.boundary_rule;
  seek.rng_seed = opts.rng_seed;
  seek.tau = opts.tau;

  std::vector<std::vector<double>> modes(m);
  std::vector<unsigned char> cap_hit(m, 0);
  if (traces != nullptr) traces->assign(m, IterateTrace{});

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(m); ++s) {
    IterateTrace* tr = traces != nullptr ? &(*traces)[s] : nullptr;
    RunOutput run = run_iterates(data, static_cast<std::size_t>(s), seek, tr);
    modes[s] = std::move(run.mode);
    cap_hit[s] = run.termination == Termination::IterationCapHit ? 1 : 0;
  }

  for (std::size_t s = 0; s < m; ++s)
    if (cap_hit[s])
      throw CapExceededError(s, "mean_shift_cluster: iteration cap hit at seed " +
                                    std::to_string(s));

  ClusterAssignment out = merge_modes(modes, merge_eps, "meanshift");
  out.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

ClusterAssignment merge_modes(const std::vector<std::vector<double>>& modes,
                              double merge_eps, std::string algorithm_tag) {
  const std::size_t m = modes.size();
  // Seeds of one basin finish with identical inlier sets, hence bitwise equal
  // modes; dedupe exactly, then single-linkage the representatives.
  std::map<std::vector<double>, std::size_t> rep_of;
  std::vector<std::size_t> rep_index(m);
  std::vector<std::vector<double>> reps;
  for (std::size_t s = 0; s < m; ++s) {
    auto [it, inserted] = rep_of.try_emplace(modes[s], reps.size());
    if (inserted) reps.push_back(modes[s]);
    rep_index[s] = it->second;
  }

  const std::size_t r = reps.size();
  std::vector<std::size_t> parent(r);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  const double eps2 = merge_eps * merge_eps;
  const std::size_t d = m == 0 ? 0 : modes.front().size();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = i + 1; j < r; ++j) {
      double s2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = reps[i][k] - reps[j][k];
        s2 += diff * diff;
      }
      if (s2 <= eps2) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  ClusterAssignment out;
  out.algorithm_tag = std::move(algorithm_tag);
  out.labels.assign(m, -1);
  std::vector<int> group_label(r, -1);
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t root = find(rep_index[s]);
    if (group_label[root] < 0) {
      group_label[root] = static_cast<int>(out.centroids.size());
      out.centroids.push_back(reps[root]);
    }
    out.labels[s] = group_label[root];
  }
  return out;
}

ClusterAssignment gaussian_ms_cluster(const DataSet& data, double w, double tol,
                                      double merge_eps, std::size_t cap) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t m = data.size();
  if (merge_eps < 0.0) merge_eps = 1e-3 * w;
  std::vector<std::vector<double>> modes(m);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(m); ++s)
    modes[s] = gaussian_mode_seek(data, static_cast<std::size_t>(s), w, tol, cap).first;
  ClusterAssignment out = merge_modes(modes, merge_eps, "gaussian-ms");
  out.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::pair<std::vector<double>, std::size_t> gaussian_mode_seek(
    const DataSet& data, std::size_t seed_index, double w, double tol,
    std::size_t cap) {
  if (seed_index >= data.size())
    throw std::invalid_argument("gaussian_mode_seek: seed index out of range");
  if (!(w > 0.0)) throw std::invalid_argument("gaussian_mode_seek: bandwidth must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("gaussian_mode_seek: tol must be positive");
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const std::size_t max_iter = default_cap(m, cap);
  const double inv2w2 = 1.0 / (2.0 * w * w);

  std::vector<double> z(data.point(seed_index).begin(), data.point(seed_index).end());
  std::vector<double> d2(m);
  std::vector<double> next(d);
  for (std::size_t t = 1; t <= max_iter; ++t) {
    scan::squared_dists(data, z, d2);
    double wsum = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double g = std::exp(-d2[i] * inv2w2);
      wsum += g;
      const double* p = data.flat().data() + i * d;
      for (std::size_t k = 0; k < d; ++k) next[k] += g * p[k];
    }
    for (std::size_t k = 0; k < d; ++k) next[k] /= wsum;
    double move2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = next[k] - z[k];
      move2 += diff * diff;
    }
    z = next;
    if (move2 <= tol * tol) return {std::move(z), t};
  }
  return {std::move(z), max_iter};
}

namespace {

// Minimum enclosing ball via Welzl's recursion, support solved from the Gram
// system of the boundary points.
class MinBall {
 public:
  MinBall(const DataSet& data, std::size_t dim) : data_(data), d_(dim) {}

  double radius2(const std::vector<std::size_t>& subset) {
    pts_ = subset;
    support_.clear();
    const Ball b = recurse(pts_.size());
    return b.r2;
  }

 private:
  struct Ball {
    std::vector<double> c;
    double r2 = -1.0;
  };

  Ball from_support() {
    Ball b;
    const std::size_t k = support_.size();
    if (k == 0) return b;
    const double* p0 = data_.flat().data() + support_[0] * d_;
    if (k == 1) {
      b.c.assign(p0, p0 + d_);
      b.r2 = 0.0;
      return b;
    }
    // Center p0 + V a in the affine hull: (V'V) a = rhs, rhs_i = ||v_i||^2/2.
    const std::size_t n = k - 1;
    std::vector<std::vector<double>> v(n, std::vector<double>(d_));
    for (std::size_t i = 0; i < n; ++i) {
      const double* pi = data_.flat().data() + support_[i + 1] * d_;
      for (std::size_t kk = 0; kk < d_; ++kk) v[i][kk] = pi[kk] - p0[kk];
    }
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) a[i][j] = scan::dot(v[i], v[j]);
      a[i][n] = 0.5 * scan::dot(v[i], v[i]);
    }
    // Gaussian elimination, partial pivoting; a vanishing pivot means the
    // support became affinely dependent, in which case that direction is
    // dropped (its coefficient set to zero).
    std::vector<double> coef(n, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t row = col + 1; row < n; ++row)
        if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
      if (std::abs(a[piv][col]) < 1e-30) continue;
      std::swap(a[piv], a[col]);
      for (std::size_t row = col + 1; row < n; ++row) {
        const double f = a[row][col] / a[col][col];
        for (std::size_t cc = col; cc <= n; ++cc) a[row][cc] -= f * a[col][cc];
      }
    }
    for (std::size_t col = n; col-- > 0;) {
      if (std::abs(a[col][col]) < 1e-30) continue;
      double s = a[col][n];
      for (std::size_t cc = col + 1; cc < n; ++cc) s -= a[col][cc] * coef[cc];
      coef[col] = s / a[col][col];
    }
    b.c.assign(p0, p0 + d_);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t kk = 0; kk < d_; ++kk) b.c[kk] += coef[i] * v[i][kk];
    double r2 = 0.0;
    for (std::size_t kk = 0; kk < d_; ++kk) {
      const double diff = b.c[kk] - p0[kk];
      r2 += diff * diff;
    }
    b.r2 = r2;
    return b;
  }

  double dist2(const Ball& b, std::size_t idx) const {
    const double* p = data_.flat().data() + idx * d_;
    double s = 0.0;
    for (std::size_t kk = 0; kk < d_; ++kk) {
      const double diff = p[kk] - b.c[kk];
      s += diff * diff;
    }
    return s;
  }

  Ball recurse(std::size_t n) {
    if (n == 0 || support_.size() == d_ + 1) return from_support();
    const std::size_t p = pts_[n - 1];
    Ball ball = recurse(n - 1);
    if (ball.r2 >= 0.0 && dist2(ball, p) <= ball.r2 * (1.0 + 1e-12) + 1e-300)
      return ball;
    support_.push_back(p);
    ball = recurse(n - 1);
    support_.pop_back();
    return ball;
  }

  const DataSet& data_;
  std::size_t d_;
  std::vector<std::size_t> pts_;
  std::vector<std::size_t> support_;
};

}  // namespace

MeanGapResult min_subset_mean_gap(const DataSet& data, double w) {
  const std::size_t m = data.size();
  if (m > 15)
    throw std::invalid_argument(
        "min_subset_mean_gap: supports at most 15 points (exponential enumeration)");
  if (!(w > 0.0)) throw std::invalid_argument("min_subset_mean_gap: bandwidth must be positive");
  const std::size_t d = data.dim();
  const double limit2 = w * w * (1.0 + 1e-9);

  MinBall meb(data, d);
  std::vector<std::vector<double>> means;
  std::vector<std::size_t> subset;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    subset.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) subset.push_back(i);
    if (subset.size() > 1 && meb.radius2(subset) > limit2) continue;
    means.push_back(scan::mean_of(data, subset));
  }

  MeanGapResult out;
  const std::size_t n = means.size();
  if (n < 2) return out;

  std::sort(means.begin(), means.end());
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (means[i] == means[i + 1]) {
      out.degenerate = true;
      break;
    }

  double best = kNoDistinctPair;
#pragma omp parallel for schedule(dynamic, 16) reduction(min : best)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = means[i][k] - means[j][k];
        s2 += diff * diff;
      }
      if (s2 > 0.0 && s2 < best) best = s2;  // s2 == 0 only for equal means
    }
  }
  out.lambda = best;
  return out;
}

}  // namespace modeshift

#include "modeshift/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "modeshift/rng.hpp"
#include "modeshift/scan.hpp"

namespace modeshift {

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Minimum-cost perfect assignment on a square matrix via shortest augmenting
// paths with potentials; exact for integer costs.
std::vector<int> solve_min_assignment(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      std::int64_t delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

AlignmentResult hungarian_align(
    const std::vector<std::vector<std::int64_t>>& counts) {
  if (counts.empty() || counts.front().empty())
    throw std::invalid_argument("hungarian_align: empty matrix");
  const std::size_t rows = counts.size();
  const std::size_t cols = counts.front().size();
  std::int64_t total = 0;
  for (const auto& r : counts) {
    if (r.size() != cols)
      throw std::invalid_argument("hungarian_align: ragged matrix");
    for (std::int64_t v : r) {
      if (v < 0) throw std::invalid_argument("hungarian_align: negative count");
      total += v;
    }
  }

  const std::size_t n = std::max(rows, cols);
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) cost[i][j] = -counts[i][j];

  const std::vector<int> row_to_col = solve_min_assignment(cost);

  AlignmentResult out;
  out.confusion_counts = counts;
  out.permutation.assign(rows, -1);
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const int j = row_to_col[i];
    if (j >= 0 && static_cast<std::size_t>(j) < cols) {
      out.permutation[i] = j;
      matched += counts[i][j];
    }
  }
  out.error_ratio =
      total == 0 ? 0.0
                 : 1.0 - static_cast<double>(matched) / static_cast<double>(total);
  return out;
}

AlignmentResult score_assignment(const ClusterAssignment& assignment,
                                 const LabeledData& truth) {
  const std::size_t m = truth.data.size();
  if (assignment.labels.size() != m || truth.true_labels.size() != m)
    throw std::invalid_argument("score_assignment: label lengths must match data size");
  int k_found = 0, k_true = 0;
  for (int l : assignment.labels) {
    if (l < 0) throw std::invalid_argument("score_assignment: negative label");
    k_found = std::max(k_found, l + 1);
  }
  for (int l : truth.true_labels) k_true = std::max(k_true, l + 1);
  std::vector<std::vector<std::int64_t>> counts(
      k_found, std::vector<std::int64_t>(k_true, 0));
  for (std::size_t i = 0; i < m; ++i)
    counts[assignment.labels[i]][truth.true_labels[i]]++;
  return hungarian_align(counts);
}

double wcss(const DataSet& data, const ClusterAssignment& assignment) {
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = assignment.centroids[assignment.labels[i]];
    const double* p = data.flat().data() + i * d;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = p[k] - c[k];
      acc += diff * diff;
    }
  }
  return acc;
}

ClusterAssignment lloyd_kmeans(const DataSet& data, const KmeansOptions& opts) {
  const double t0 = now_seconds();
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const std::size_t k = opts.k;
  if (k == 0 || k > m)
    throw std::invalid_argument("lloyd_kmeans: need 1 <= k <= M");

  std::vector<std::vector<double>> centroids;
  if (opts.init == KmeansInit::Given) {
    if (opts.given_centroids.size() != k)
      throw std::invalid_argument("lloyd_kmeans: given_centroids size != k");
    centroids = opts.given_centroids;
  } else {
    // k-means++ seeding: next center sampled proportional to squared
    // distance from the nearest chosen one.
    rng::SplitMix64 stream(rng::derive_stream(opts.rng_seed, 0xC11ULL));
    centroids.reserve(k);
    std::vector<double> best_d2(m, std::numeric_limits<double>::infinity());
    const std::size_t first = stream.below(m);
    centroids.emplace_back(data.point(first).begin(), data.point(first).end());
    while (centroids.size() < k) {
      std::vector<double> d2(m);
      scan::squared_dists(data, centroids.back(), d2);
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        best_d2[i] = std::min(best_d2[i], d2[i]);
        total += best_d2[i];
      }
      std::size_t chosen = 0;
      if (total > 0.0) {
        const double target = stream.unit() * total;
        double acc = 0.0;
        chosen = m - 1;
        for (std::size_t i = 0; i < m; ++i) {
          acc += best_d2[i];
          if (acc >= target) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = stream.below(m);
      }
      centroids.emplace_back(data.point(chosen).begin(), data.point(chosen).end());
    }
  }

  std::vector<int> labels(m, 0);
  std::vector<double> dist_to_own(m, 0.0);
  std::vector<std::vector<double>> dists(k, std::vector<double>(m));

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    for (std::size_t c = 0; c < k; ++c)
      scan::squared_dists(data, centroids[c], dists[c]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
      int best = 0;
      double best_v = dists[0][i];
      for (std::size_t c = 1; c < k; ++c)
        if (dists[c][i] < best_v) {
          best_v = dists[c][i];
          best = static_cast<int>(c);
        }
      labels[i] = best;
      dist_to_own[i] = best_v;
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = data.flat().data() + i * d;
      auto& s = sums[labels[i]];
      for (std::size_t c = 0; c < d; ++c) s[c] += p[c];
      counts[labels[i]]++;
    }

    // Re-seed emptied clusters at the points farthest from their nearest
    // centroid, one point per cluster, largest distance first.
    std::vector<std::size_t> empties;
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] == 0) empties.push_back(c);
    std::vector<char> taken(m, 0);
    for (std::size_t c : empties) {
      std::size_t far = 0;
      double far_v = -1.0;
      for (std::size_t i = 0; i < m; ++i)
        if (!taken[i] && dist_to_own[i] > far_v) {
          far_v = dist_to_own[i];
          far = i;
        }
      taken[far] = 1;
      centroids[c].assign(data.point(far).begin(), data.point(far).end());
    }

    double move2_max = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // just re-seeded
      double move2 = 0.0;
      for (std::size_t cc = 0; cc < d; ++cc) {
        const double nv = sums[c][cc] / static_cast<double>(counts[c]);
        const double diff = nv - centroids[c][cc];
        move2 += diff * diff;
        centroids[c][cc] = nv;
      }
      move2_max = std::max(move2_max, move2);
    }
    if (empties.empty() && opts.tol >= 0.0 && move2_max <= opts.tol * opts.tol)
      break;
  }

  // Final assignment against the settled centroids.
  for (std::size_t c = 0; c < k; ++c)
    scan::squared_dists(data, centroids[c], dists[c]);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    int best = 0;
    double best_v = dists[0][i];
    for (std::size_t c = 1; c < k; ++c)
      if (dists[c][i] < best_v) {
        best_v = dists[c][i];
        best = static_cast<int>(c);
      }
    labels[i] = best;
  }

  ClusterAssignment out;
  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.algorithm_tag = "kmeans";
  out.wall_time_sec = now_seconds() - t0;
  return out;
}

EmResult em_spherical_gmm(const DataSet& data, const EmOptions& opts) {
  const double t0 = now_seconds();
  const std::size_t m = data.size();
  const std::size_t d = data.dim();
  const std::size_t k = opts.k;
  if (k == 0 || k > m)
    throw std::invalid_argument("em_spherical_gmm: need 1 <= k <= M");

  KmeansOptions km;
  km.k = k;
  km.rng_seed = rng::derive_stream(opts.rng_seed, 0xE3ULL);
  km.max_iter = 50;
  const ClusterAssignment init = lloyd_kmeans(data, km);

  // Variance floor relative to the overall data scale.
  std::vector<double> grand(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* p = data.flat().data() + i * d;
    for (std::size_t c = 0; c < d; ++c) grand[c] += p[c];
  }
  for (double& v : grand) v /= static_cast<double>(m);
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* p = data.flat().data() + i * d;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = p[c] - grand[c];
      scale += diff * diff;
    }
  }
  scale /= static_cast<double>(m) * static_cast<double>(d);
  const double var_floor = std::max(1e-12 * scale, 1e-300);

  std::vector<std::vector<double>> means = init.centroids;
  std::vector<double> vars(k, 0.0), weights(k, 0.0);
  {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const int c = init.labels[i];
      counts[c]++;
      const double* p = data.flat().data() + i * d;
      for (std::size_t cc = 0; cc < d; ++cc) {
        const double diff = p[cc] - means[c][cc];
        vars[c] += diff * diff;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      weights[c] = static_cast<double>(counts[c]) / static_cast<double>(m);
      vars[c] = counts[c] > 0
                    ? vars[c] / (static_cast<double>(counts[c]) * static_cast<double>(d))
                    : scale;
      vars[c] = std::max(vars[c], var_floor);
    }
  }

  EmResult result;
  std::vector<double> resp(m * k);
  std::vector<double> point_ll(m);
  std::vector<std::vector<double>> dist2(k, std::vector<double>(m));
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi_v<double>);

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    for (std::size_t c = 0; c < k; ++c)
      scan::squared_dists(data, means[c], dist2[c]);

    std::vector<double> log_norm(k), log_w(k);
    for (std::size_t c = 0; c < k; ++c) {
      log_norm[c] = -static_cast<double>(d) * (half_log_2pi + 0.5 * std::log(vars[c]));
      log_w[c] = weights[c] > 0.0 ? std::log(weights[c])
                                  : -std::numeric_limits<double>::infinity();
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      double* r = resp.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) {
        r[c] = log_w[c] + log_norm[c] - dist2[c][i] / (2.0 * vars[c]);
        best = std::max(best, r[c]);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) sum += std::exp(r[c] - best);
      point_ll[i] = best + std::log(sum);
      for (std::size_t c = 0; c < k; ++c) r[c] = std::exp(r[c] - best) / sum;
    }

    double ll = 0.0;
    for (std::size_t i = 0; i < m; ++i) ll += point_ll[i];
    result.log_likelihood.push_back(ll);

    // M-step, accumulated in point order.
    std::vector<double> nk(k, 0.0);
    std::vector<std::vector<double>> new_means(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = data.flat().data() + i * d;
      const double* r = resp.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) {
        nk[c] += r[c];
        for (std::size_t cc = 0; cc < d; ++cc) new_means[c][cc] += r[c] * p[cc];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (nk[c] <= 0.0) continue;  // dead component: keep its parameters
      for (std::size_t cc = 0; cc < d; ++cc) new_means[c][cc] /= nk[c];
    }
    std::vector<double> new_vars(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = data.flat().data() + i * d;
      const double* r = resp.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) {
        if (nk[c] <= 0.0) continue;
        double s2 = 0.0;
        for (std::size_t cc = 0; cc < d; ++cc) {
          const double diff = p[cc] - new_means[c][cc];
          s2 += diff * diff;
        }
        new_vars[c] += r[c] * s2;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (nk[c] <= 0.0) continue;
      means[c] = new_means[c];
      double v = new_vars[c] / (nk[c] * static_cast<double>(d));
      if (v < var_floor) {
        v = var_floor;
        result.variance_floored = true;
      }
      vars[c] = v;
      weights[c] = nk[c] / static_cast<double>(m);
    }

    if (result.log_likelihood.size() >= 2) {
      const double prev = result.log_likelihood[result.log_likelihood.size() - 2];
      if (ll - prev <= opts.tol && ll >= prev) break;
    }
  }

  ClusterAssignment assignment;
  assignment.labels.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* r = resp.data() + i * k;
    int best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (r[c] > r[best]) best = static_cast<int>(c);
    assignment.labels[i] = best;
  }
  assignment.centroids = means;
  assignment.algorithm_tag = "em";
  assignment.wall_time_sec = now_seconds() - t0;
  result.assignment = std::move(assignment);
  return result;
}

}  // namespace modeshift

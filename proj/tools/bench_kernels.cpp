// Timings of the OpenMP kernels against the serial reference path on a
// generated mixture. Run with --quick for the CI-sized configuration.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "modeshift/deflation.hpp"
#include "modeshift/mean_shift.hpp"
#include "modeshift/reference.hpp"
#include "modeshift/scan.hpp"
#include "modeshift/synth.hpp"

using namespace modeshift;

namespace {

double seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double time_best_of(F&& f, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = seconds();
    f();
    best = std::min(best, seconds() - t0);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;

  GmmSpec spec;
  spec.dim = quick ? 32 : 50;
  spec.components = quick ? 3 : 10;
  spec.centroid_std = 4.0;
  spec.sigma = 1.0;
  spec.sizes.assign(spec.components, quick ? 40 : 400);
  spec.rng_seed = 123;
  const LabeledData labeled = generate_gmm(spec);
  const DataSet& data = labeled.data;
  const double w = std::sqrt(2.0 * double(spec.dim)) * spec.sigma;

  std::printf("M=%zu d=%zu threads=%d\n", data.size(), data.dim(),
              omp_get_max_threads());

  // Distance scan: one query against every point.
  std::vector<double> z(data.point(0).begin(), data.point(0).end());
  std::vector<double> d2(data.size());
  const int reps = quick ? 5 : 20;
  const double t_scan =
      time_best_of([&] { scan::squared_dists(data, z, d2); }, reps);
  std::vector<double> d2_ref(data.size());
  const double t_scan_ref = time_best_of(
      [&] {
        for (std::size_t i = 0; i < data.size(); ++i)
          d2_ref[i] = reference::squared_dist(data.point(i), z);
      },
      reps);
  double max_rel = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    max_rel = std::max(max_rel, std::abs(d2[i] - d2_ref[i]) /
                                    std::max(1.0, d2_ref[i]));
  std::printf("distance scan      : %8.3f ms omp | %8.3f ms serial | x%.2f (max rel dev %.1e)\n",
              1e3 * t_scan, 1e3 * t_scan_ref, t_scan_ref / t_scan, max_rel);
  if (max_rel > 1e-9) {
    std::printf("distance mismatch beyond tolerance\n");
    return 1;
  }

  // Loss evaluation.
  const double t_loss = time_best_of(
      [&] { (void)epanechnikov_loss(data, z, w); }, reps);
  const double t_loss_ref = time_best_of(
      [&] { (void)reference::epanechnikov_loss(data, z, w); }, reps);
  std::printf("loss evaluation    : %8.3f ms omp | %8.3f ms serial | x%.2f\n",
              1e3 * t_loss, 1e3 * t_loss_ref, t_loss_ref / t_loss);

  // Full clustering from every seed.
  MeanShiftOptions opts;
  opts.bandwidth = w;
  ClusterAssignment fast;
  const double t_ms = time_best_of([&] { fast = mean_shift_cluster(data, opts); }, 1);
  ClusterAssignment ref;
  const double t_ms_ref = time_best_of(
      [&] { ref = reference::mean_shift_cluster(data, w, 1e-6 * w, 0); }, 1);
  std::printf("mean shift (all)   : %8.3f ms omp | %8.3f ms serial | x%.2f\n",
              1e3 * t_ms, 1e3 * t_ms_ref, t_ms_ref / t_ms);
  if (fast.labels != ref.labels) {
    std::printf("label mismatch between omp and serial paths\n");
    return 1;
  }

  // Deflation.
  DeflationConfig cfg;
  cfg.sigma = spec.sigma;
  ClusterAssignment defl;
  const double t_defl = time_best_of([&] { defl = deflation_cluster(data, cfg); }, 1);
  ClusterAssignment defl_ref;
  const double t_defl_ref =
      time_best_of([&] { defl_ref = reference::deflation_cluster(data, w, 0); }, 1);
  std::printf("deflation          : %8.3f ms omp | %8.3f ms serial | x%.2f\n",
              1e3 * t_defl, 1e3 * t_defl_ref, t_defl_ref / t_defl);
  if (defl.labels != defl_ref.labels) {
    std::printf("label mismatch between omp and serial deflation\n");
    return 1;
  }

  std::printf("ok\n");
  return 0;
}

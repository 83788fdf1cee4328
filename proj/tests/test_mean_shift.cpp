#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "modeshift/errors.hpp"
#include "modeshift/mean_shift.hpp"
#include "modeshift/reference.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/scan.hpp"

using namespace modeshift;

namespace {

DataSet make1d(std::vector<double> xs) { return DataSet(std::move(xs), 1); }

DataSet random_points(std::uint64_t seed, std::size_t m, std::size_t d,
                      double spread = 2.0) {
  rng::SplitMix64 stream(seed);
  std::vector<double> flat(m * d);
  for (double& v : flat) v = spread * stream.normal();
  return DataSet(std::move(flat), d);
}

ModeSeekOptions with_bandwidth(double w) {
  ModeSeekOptions o;
  o.bandwidth = w;
  return o;
}

// Per-step checks of the descent amounts: a mean update drops the loss by at
// least |I| ||dz||^2, an escape by at least (and on tie-constructed data
// exactly) w^2/(|I|+1).
void check_decrease_amounts(const IterateTrace& trace, double w,
                            bool escapes_exact) {
  for (std::size_t t = 1; t < trace.steps.size(); ++t) {
    const auto& prev = trace.steps[t - 1];
    const auto& cur = trace.steps[t];
    const double drop = prev.f_value - cur.f_value;
    if (cur.boundary_escape) {
      const double expected =
          w * w / (static_cast<double>(prev.inlier_count) + 1.0);
      CHECK(drop >= expected - 1e-9 * std::max(1.0, expected));
      if (escapes_exact)
        CHECK(drop == doctest::Approx(expected).epsilon(1e-9));
    } else {
      double move2 = 0.0;
      for (std::size_t k = 0; k < prev.z.size(); ++k) {
        const double diff = prev.z[k] - cur.z[k];
        move2 += diff * diff;
      }
      CHECK(drop >= static_cast<double>(prev.inlier_count) * move2 - 1e-9);
    }
    CHECK(cur.f_value < prev.f_value);
  }
}

}  // namespace

TEST_CASE("iterates reach the two-point mean") {
  const DataSet data = make1d({0.0, 0.4, 2.0});
  const auto [mode, trace] = mode_seek(data, 0, with_bandwidth(1.0));
  CHECK(mode.mode == std::vector<double>{0.2});
  CHECK(mode.inlier_indices == std::vector<std::size_t>{0, 1});
  CHECK(mode.iterations == 2);
  CHECK(trace.termination == Termination::Converged);
  CHECK(trace.steps.size() == 2);
  CHECK(trace.steps[0].f_value == doctest::Approx(1.16).epsilon(1e-15));
  CHECK_FALSE(trace.steps[1].boundary_escape);
  CHECK(mode.certificate.certificate == Stationarity::LocalMin);
  CHECK(mode.mode == std::vector<double>{(0.0 + 0.4) / 2.0});
}

TEST_CASE("stalled fixed point escapes through the boundary") {
  const DataSet data = make1d({-1.0, 0.0, 1.0});
  const auto [mode, trace] = mode_seek(data, 1, with_bandwidth(1.0));
  CHECK(mode.mode == std::vector<double>{-0.5});
  CHECK(mode.inlier_indices == std::vector<std::size_t>{0, 1});
  CHECK(trace.steps.front().f_value == 2.0);
  CHECK(trace.steps.back().f_value == 1.5);
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[1].boundary_escape);
  CHECK(mode.certificate.certificate == Stationarity::LocalMin);
  check_decrease_amounts(trace, 1.0, true);

  // The Random rule escapes to one of the two symmetric minima,
  // reproducibly for a fixed seed.
  ModeSeekOptions opts = with_bandwidth(1.0);
  opts.boundary_rule = BoundaryRule::Random;
  opts.rng_seed = 9;
  const auto [rmode, rtrace] = mode_seek(data, 1, opts);
  CHECK((rmode.mode == std::vector<double>{-0.5} ||
         rmode.mode == std::vector<double>{0.5}));
  const auto [rmode2, rtrace2] = mode_seek(data, 1, opts);
  CHECK(rmode.mode == rmode2.mode);
}

TEST_CASE("single point terminates immediately") {
  const DataSet data = make1d({0.7});
  const auto [mode, trace] = mode_seek(data, 0, with_bandwidth(2.0));
  CHECK(mode.mode == std::vector<double>{0.7});
  CHECK(mode.iterations == 1);
  CHECK(trace.steps.size() == 1);
  CHECK(mode.certificate.certificate == Stationarity::LocalMin);
}

TEST_CASE("iteration cap: diagnostic per run, error for the full pass") {
  // Seed 0 first averages {0, 0.9}, which pulls 1.1 into the ball, so the
  // run needs a second pass and a cap of one cuts it short.
  const DataSet data = make1d({0.0, 0.9, 1.1});
  ModeSeekOptions opts = with_bandwidth(1.0);
  opts.cap = 1;
  const auto [mode, trace] = mode_seek(data, 0, opts);
  CHECK(trace.termination == Termination::IterationCapHit);

  MeanShiftOptions mopts;
  mopts.bandwidth = 1.0;
  mopts.cap = 1;
  CHECK_THROWS_AS(mean_shift_cluster(data, mopts), CapExceededError);
}

TEST_CASE("monotone strict decrease and certificates on random data") {
  rng::SplitMix64 stream(2025);
  std::size_t runs = 0;
  std::map<std::size_t, std::size_t> iteration_histogram;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + stream.below(40);
    const std::size_t d = 1 + stream.below(5);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.3 + 2.0 * stream.unit();
    for (std::size_t seed = 0; seed < m; ++seed) {
      const auto [mode, trace] = mode_seek(data, seed, with_bandwidth(w));
      ++runs;
      REQUIRE(trace.termination == Termination::Converged);
      CHECK(trace.steps.size() < 10 * m + 100);
      iteration_histogram[trace.steps.size()]++;
      check_decrease_amounts(trace, w, false);
      for (const auto& step : trace.steps) CHECK(step.inlier_count >= 1);
      CHECK(mode.certificate.certificate == Stationarity::LocalMin);
      CHECK(mode.mode == scan::mean_of(data, mode.inlier_indices));
    }
  }
  CHECK(runs > 1000);
  const auto modal = std::max_element(
      iteration_histogram.begin(), iteration_histogram.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  CHECK(modal->first < 10);
}

TEST_CASE("terminal points are strict local minima under perturbation") {
  rng::SplitMix64 stream(626);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t m = 3 + stream.below(25);
    const std::size_t d = 1 + stream.below(4);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.5 + 1.5 * stream.unit();
    const std::size_t seed = stream.below(m);
    const auto [mode, trace] = mode_seek(data, seed, with_bandwidth(w));
    const double f_star = epanechnikov_loss(data, mode.mode, w);
    std::vector<double> u(d);
    for (int probe = 0; probe < 100; ++probe) {
      double n2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        u[k] = stream.normal();
        n2 += u[k] * u[k];
      }
      if (n2 == 0.0) continue;
      std::vector<double> zp(mode.mode);
      for (std::size_t k = 0; k < d; ++k)
        zp[k] += 1e-4 * w * u[k] / std::sqrt(n2);
      CHECK(epanechnikov_loss(data, zp, w) >= f_star - 1e-12);
    }
  }
}

TEST_CASE("full clustering on separated groups") {
  const DataSet data = make1d({0.0, 0.1, 10.0, 10.1});
  MeanShiftOptions opts;
  opts.bandwidth = 1.0;
  const ClusterAssignment out = mean_shift_cluster(data, opts);
  CHECK(out.cluster_count() == 2);
  CHECK(out.labels == std::vector<int>{0, 0, 1, 1});
  CHECK(out.centroids[0] == std::vector<double>{(0.0 + 0.1) / 2.0});
  CHECK(out.centroids[1] == std::vector<double>{(10.0 + 10.1) / 2.0});
}

TEST_CASE("full clustering of a single point") {
  const DataSet data = make1d({3.0});
  MeanShiftOptions opts;
  opts.bandwidth = 0.5;
  const ClusterAssignment out = mean_shift_cluster(data, opts);
  CHECK(out.cluster_count() == 1);
  CHECK(out.labels == std::vector<int>{0});
}

TEST_CASE("full clustering matches the serial reference") {
  rng::SplitMix64 stream(11);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t m = 2 + stream.below(30);
    const std::size_t d = 1 + stream.below(3);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.4 + 1.5 * stream.unit();
    MeanShiftOptions opts;
    opts.bandwidth = w;
    const ClusterAssignment fast = mean_shift_cluster(data, opts);
    const ClusterAssignment ref =
        reference::mean_shift_cluster(data, w, 1e-6 * w, 0);
    REQUIRE(fast.labels.size() == ref.labels.size());
    CHECK(fast.labels == ref.labels);
    REQUIRE(fast.cluster_count() == ref.cluster_count());
    for (std::size_t c = 0; c < fast.cluster_count(); ++c)
      for (std::size_t k = 0; k < d; ++k)
        CHECK(fast.centroids[c][k] ==
              doctest::Approx(ref.centroids[c][k]).epsilon(1e-9));
  }
}

TEST_CASE("gaussian iterates") {
  const DataSet single = make1d({1.5});
  const auto [z1, t1] = gaussian_mode_seek(single, 0, 1.0, 1e-10, 0);
  CHECK(z1 == std::vector<double>{1.5});
  CHECK(t1 == 1);

  // Symmetric weights keep the midpoint fixed.
  const DataSet with_mid = make1d({-0.8, 0.0, 0.8});
  const auto [zm, tm] = gaussian_mode_seek(with_mid, 1, 1.0, 1e-12, 0);
  CHECK(zm[0] == doctest::Approx(0.0).epsilon(1e-12));

  const DataSet three = make1d({0.0, 0.4, 2.0});
  const auto [zg, tg] = gaussian_mode_seek(three, 0, 1.0, 1e-10, 0);
  const auto [em, et] = mode_seek(three, 0, with_bandwidth(1.0));
  CHECK(tg > em.iterations);  // smooth profile converges slower
}

TEST_CASE("subset mean gap oracle on constructed data") {
  const DataSet pair = make1d({0.0, 1.0});
  const MeanGapResult gap = min_subset_mean_gap(pair, 0.4);
  CHECK(gap.lambda == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(gap.degenerate);

  const DataSet single = make1d({5.0});
  const MeanGapResult none = min_subset_mean_gap(single, 1.0);
  CHECK(none.lambda == kNoDistinctPair);

  // {-1,1} and {0} share the mean 0 once w is large enough to enclose both.
  const DataSet sym = make1d({-1.0, 0.0, 1.0});
  const MeanGapResult degen = min_subset_mean_gap(sym, 2.0);
  CHECK(degen.degenerate);

  std::vector<double> big(16, 0.0);
  CHECK_THROWS_AS(min_subset_mean_gap(DataSet(big, 1), 1.0),
                  std::invalid_argument);
}

TEST_CASE("subset mean gap bounds the number of moving steps") {
  rng::SplitMix64 stream(314);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + stream.below(7);
    const std::size_t d = 1 + stream.below(2);
    const DataSet data = random_points(stream.next_u64(), m, d, 1.0);
    const double w = 0.4 + 1.2 * stream.unit();
    const MeanGapResult gap = min_subset_mean_gap(data, w);
    REQUIRE_FALSE(gap.degenerate);
    for (std::size_t seed = 0; seed < m; ++seed) {
      const auto [mode, trace] = mode_seek(data, seed, with_bandwidth(w));
      REQUIRE(trace.termination == Termination::Converged);
      const double f0 = trace.steps.front().f_value;
      const double fT = trace.steps.back().f_value;
      const double moving = static_cast<double>(trace.steps.size() - 1);
      if (gap.lambda == kNoDistinctPair) {
        CHECK(moving == 0.0);
      } else {
        CHECK(moving <= (f0 - fT) / gap.lambda + 1e-9);
      }
    }
  }
}

TEST_CASE("runs are a pure function of data and bandwidth") {
  const DataSet data = random_points(40, 60, 3);
  MeanShiftOptions opts;
  opts.bandwidth = 1.3;
  const ClusterAssignment a = mean_shift_cluster(data, opts);
  const ClusterAssignment b = mean_shift_cluster(data, opts);
  CHECK(a.labels == b.labels);
  CHECK(a.centroids == b.centroids);
}

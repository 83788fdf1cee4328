#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "modeshift/deflation.hpp"
#include "modeshift/errors.hpp"
#include "modeshift/reference.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/synth.hpp"

using namespace modeshift;

namespace {

DataSet make1d(std::vector<double> xs) { return DataSet(std::move(xs), 1); }

}  // namespace

TEST_CASE("bandwidth defaults to sqrt(2 d) sigma") {
  DeflationConfig cfg;
  cfg.sigma = 0.1;
  CHECK(cfg.bandwidth(1) == doctest::Approx(std::sqrt(0.02)).epsilon(1e-15));
  cfg.sigma = 1.0;
  CHECK(cfg.bandwidth(100) == doctest::Approx(std::sqrt(200.0)).epsilon(1e-15));
  cfg.bandwidth_override = 2.5;
  CHECK(cfg.bandwidth(100) == 2.5);
}

TEST_CASE("two tight groups, lowest-index seeding") {
  // The first round seeds at x0 = 0 and its run settles on the mean of
  // {0, 0.1}; the ball of radius sqrt(0.02) around 0.05 does not reach 0.2,
  // which therefore founds its own cluster.
  const DataSet data = make1d({0.0, 0.1, 0.2, 10.0, 10.1});
  DeflationConfig cfg;
  cfg.sigma = 0.1;
  const ClusterAssignment out = deflation_cluster(data, cfg);
  const ClusterAssignment ref = reference::deflation_cluster(
      data, cfg.bandwidth(1), 0);
  CHECK(out.labels == ref.labels);
  CHECK(out.labels == std::vector<int>{0, 0, 1, 2, 2});
  CHECK(out.cluster_count() == 3);

  // Every point carries exactly one label and labels partition the data.
  std::set<int> seen(out.labels.begin(), out.labels.end());
  CHECK(seen == std::set<int>{0, 1, 2});
}

TEST_CASE("single point forms a single cluster") {
  const DataSet data = make1d({4.0});
  DeflationConfig cfg;
  cfg.sigma = 1.0;
  const ClusterAssignment out = deflation_cluster(data, cfg);
  CHECK(out.cluster_count() == 1);
  CHECK(out.labels == std::vector<int>{0});
}

TEST_CASE("separation soundness on generated mixtures") {
  // Strong separation and high enough dimension that the radius-w ball
  // around a centroid holds its whole component: each round claims points
  // of exactly one component.
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    GmmSpec spec;
    spec.dim = 50;
    spec.components = 4;
    spec.sigma = 1.0;
    spec.centroid_std = 1.0;
    spec.sizes = {20, 25, 30, 35};
    spec.rng_seed = seed;
    LabeledData labeled = generate_gmm(spec);
    const double need =
        2.0 * std::sqrt(50.0) + 2.0 * std::sqrt(100.0);  // comfortably apart
    while (separation_stats(labeled).min_centroid_distance <= need) {
      spec.centroid_std *= 1.4;
      labeled = generate_gmm(spec);
    }
    DeflationConfig cfg;
    cfg.sigma = 1.0;
    const ClusterAssignment out = deflation_cluster(labeled.data, cfg);
    CHECK(out.cluster_count() == spec.components);
    // Round-to-component map is injective: one true component per round.
    std::vector<std::set<int>> truths(out.cluster_count());
    for (std::size_t i = 0; i < labeled.data.size(); ++i)
      truths[out.labels[i]].insert(labeled.true_labels[i]);
    std::set<int> used;
    for (const auto& t : truths) {
      CHECK(t.size() == 1);
      used.insert(*t.begin());
    }
    CHECK(used.size() == out.cluster_count());
  }
}

TEST_CASE("a huge bandwidth claims everything in one round") {
  const DataSet data = make1d({0.0, 0.5, 1.0});
  DeflationConfig cfg;
  cfg.sigma = 10.0;
  const ClusterAssignment out = deflation_cluster(data, cfg);
  CHECK(out.cluster_count() == 1);
}

TEST_CASE("stall reported when a round cannot claim anything") {
  // A lone point whose run drifts into the already-claimed mass: the heavy
  // groups at -0.1 and 0.3 pull the iterates from 0.75 to a mode ~0.736
  // away, beyond w = 0.5, so the second round claims nothing.
  std::vector<double> xs(50, -0.1);
  xs.insert(xs.end(), 20, 0.3);
  xs.push_back(0.75);
  const DataSet data = make1d(std::move(xs));
  DeflationConfig cfg;
  cfg.bandwidth_override = 0.5;
  CHECK_THROWS_AS(deflation_cluster(data, cfg), DeflationStallError);
}

TEST_CASE("chi-square tail bound values") {
  CHECK(chi_square_tail_bound(2.0, 2) ==
        doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-15));
  CHECK(chi_square_tail_bound(2.0, 100) ==
        doctest::Approx(2.1715792741453064e-07).epsilon(1e-12));
  CHECK(chi_square_tail_bound(1.0 + 1e-12, 4) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(chi_square_tail_bound(1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_tail_bound(0.5, 4), std::invalid_argument);

  // Strictly decreasing in d, inside (0, 1).
  double prev = 1.0;
  for (std::size_t d = 1; d <= 64; ++d) {
    const double b = chi_square_tail_bound(2.0, d);
    CHECK(b > 0.0);
    CHECK(b < 1.0);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("empirical chi-square tail is below the bound and decays") {
  rng::SplitMix64 stream(4242);
  const std::size_t draws = 200000;
  double prev_phat = 1.0;
  for (std::size_t d : {1, 2, 5, 10, 20}) {
    std::size_t over = 0;
    for (std::size_t s = 0; s < draws; ++s) {
      double y = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double n = stream.normal();
        y += n * n;
      }
      if (y > 2.0 * static_cast<double>(d)) ++over;
    }
    const double phat = static_cast<double>(over) / static_cast<double>(draws);
    const double se = std::sqrt(phat * (1.0 - phat) / static_cast<double>(draws));
    CHECK(phat <= chi_square_tail_bound(2.0, d) + 3.0 * se);
    CHECK(phat < prev_phat);
    prev_phat = phat;
  }
}

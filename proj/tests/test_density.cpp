#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "modeshift/density.hpp"
#include "modeshift/errors.hpp"
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

}  // namespace

TEST_CASE("clipped squared norm") {
  CHECK(clipped_sqnorm(std::vector<double>{0.0}, 1.0) == 0.0);
  CHECK(clipped_sqnorm(std::vector<double>{0.5}, 1.0) == 0.25);
  CHECK(clipped_sqnorm(std::vector<double>{2.0}, 1.0) == 1.0);
  CHECK(clipped_sqnorm(std::vector<double>{3.0, 4.0}, 10.0) == 25.0);
  CHECK_THROWS_AS(
      clipped_sqnorm(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}, 1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(clipped_sqnorm(std::vector<double>{1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("loss values") {
  const DataSet both_clip = make1d({-1.0, 1.0});
  CHECK(epanechnikov_loss(both_clip, std::vector<double>{0.0}, 1.0) == 2.0);

  // Hand evaluation: 0.04 + 0.04 + 1.
  const DataSet three = make1d({0.0, 0.4, 2.0});
  CHECK(epanechnikov_loss(three, std::vector<double>{0.2}, 1.0) ==
        doctest::Approx(1.08).epsilon(1e-14));

  const DataSet one = make1d({0.7});
  CHECK(epanechnikov_loss(one, std::vector<double>{0.7}, 3.0) == 0.0);

  CHECK_THROWS_AS(epanechnikov_loss(three, std::vector<double>{0.0, 0.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("loss range and agreement with the serial reference") {
  rng::SplitMix64 stream(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + stream.below(40);
    const std::size_t d = 1 + stream.below(5);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.2 + 2.0 * stream.unit();
    std::vector<double> z(d);
    for (double& v : z) v = 3.0 * stream.normal();
    const double f = epanechnikov_loss(data, z, w);
    CHECK(f >= 0.0);
    CHECK(f <= static_cast<double>(m) * w * w + 1e-12);
    CHECK(f == doctest::Approx(reference::epanechnikov_loss(data, z, w))
                   .epsilon(1e-12));
    // A data point's own term is zero.
    const std::size_t i = stream.below(m);
    std::vector<double> at(data.point(i).begin(), data.point(i).end());
    CHECK(epanechnikov_loss(data, at, w) <=
          static_cast<double>(m - 1) * w * w + 1e-12);
  }
}

TEST_CASE("neighbor classification") {
  const DataSet sym = make1d({-1.0, 0.0, 1.0});
  const NeighborSplit split =
      classify_neighbors(sym, std::vector<double>{0.0}, 1.0, 0.0);
  CHECK(split.inliers == std::vector<std::size_t>{1});
  CHECK(split.boundary == std::vector<std::size_t>{0, 2});

  const DataSet three = make1d({0.0, 0.4, 2.0});
  const NeighborSplit s2 =
      classify_neighbors(three, std::vector<double>{0.2}, 1.0, 0.0);
  CHECK(s2.inliers == std::vector<std::size_t>{0, 1});
  CHECK(s2.boundary.empty());

  const DataSet single = make1d({0.3});
  const NeighborSplit s3 =
      classify_neighbors(single, std::vector<double>{0.3}, 0.7, 0.0);
  CHECK(s3.inliers == std::vector<std::size_t>{0});
  CHECK(s3.boundary.empty());

  CHECK_THROWS_AS(classify_neighbors(single, std::vector<double>{0.0}, 1.0, 0.5),
                  std::invalid_argument);

  // Outside points are strictly outside the band.
  rng::SplitMix64 stream(3);
  for (int trial = 0; trial < 20; ++trial) {
    const DataSet data = random_points(stream.next_u64(), 30, 3);
    std::vector<double> z{stream.normal(), stream.normal(), stream.normal()};
    const double w = 0.5 + stream.unit();
    const double tau = 1e-4 * w * w;
    const NeighborSplit sp = classify_neighbors(data, z, w, tau);
    std::vector<char> seen(30, 0);
    for (std::size_t i : sp.inliers) seen[i] = 1;
    for (std::size_t i : sp.boundary) seen[i] = 1;
    for (std::size_t i = 0; i < 30; ++i) {
      if (seen[i]) continue;
      CHECK(reference::squared_dist(data.point(i), z) > w * w + tau);
    }
  }
}

TEST_CASE("gradient at smooth points") {
  const DataSet pair = make1d({0.0, 0.5});
  const auto g = loss_gradient(pair, std::vector<double>{0.4}, 1.0);
  CHECK(g.size() == 1);
  CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-15));

  const DataSet single = make1d({0.8});
  CHECK(loss_gradient(single, std::vector<double>{0.8}, 1.0)[0] == 0.0);

  const DataSet far = make1d({0.0, 3.0});
  CHECK(loss_gradient(far, std::vector<double>{0.0}, 1.0)[0] == 0.0);
  CHECK(hessian_scale(far, std::vector<double>{0.0}, 1.0) == 2.0);

  // Non-smooth point: the error names the offending index.
  const DataSet sym = make1d({-1.0, 0.0, 1.0});
  CHECK_THROWS_AS(loss_gradient(sym, std::vector<double>{0.0}, 1.0),
                  NonSmoothPointError);
  try {
    loss_gradient(sym, std::vector<double>{0.0}, 1.0);
  } catch (const NonSmoothPointError& e) {
    CHECK(e.boundary_index == 0);
  }
}

TEST_CASE("gradient matches central finite differences") {
  rng::SplitMix64 stream(2024);
  std::size_t checked = 0;
  while (checked < 1000) {
    const std::size_t m = 2 + stream.below(49);
    const std::size_t d = 1 + stream.below(5);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.3 + 2.5 * stream.unit();
    const double h = 1e-6 * w;
    std::vector<double> z(d);
    for (double& v : z) v = 2.5 * stream.normal();
    // Keep the probe segment clear of the sphere band.
    bool clear = true;
    for (std::size_t i = 0; i < m && clear; ++i) {
      const double d2 = reference::squared_dist(data.point(i), z);
      if (std::abs(d2 - w * w) < 1e-3 * w * w) clear = false;
    }
    if (!clear) continue;
    const auto g = loss_gradient(data, z, w);
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (epanechnikov_loss(data, zp, w) -
                         epanechnikov_loss(data, zm, w)) /
                        (2.0 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5);
      ++checked;
    }
  }
}

TEST_CASE("directional derivative at constructed boundary points") {
  const DataSet one = make1d({1.0});
  CHECK(directional_derivative(one, std::vector<double>{0.0},
                               std::vector<double>{1.0}, 1.0) == -2.0);
  CHECK(directional_derivative(one, std::vector<double>{0.0},
                               std::vector<double>{-1.0}, 1.0) == 0.0);
  CHECK_THROWS_AS(directional_derivative(one, std::vector<double>{0.0},
                                         std::vector<double>{0.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("directional derivative equals gradient inner product when smooth") {
  rng::SplitMix64 stream(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + stream.below(30);
    const std::size_t d = 1 + stream.below(4);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.4 + stream.unit();
    std::vector<double> z(d), delta(d);
    for (double& v : z) v = 2.0 * stream.normal();
    for (double& v : delta) v = stream.normal();
    bool smooth = true;
    for (std::size_t i = 0; i < m; ++i)
      if (reference::squared_dist(data.point(i), z) == w * w) smooth = false;
    if (!smooth || scan::sq_norm(delta) == 0.0) continue;
    const auto g = loss_gradient(data, z, w);
    double inner = 0.0;
    for (std::size_t k = 0; k < d; ++k) inner += g[k] * delta[k];
    CHECK(directional_derivative(data, z, delta, w) ==
          doctest::Approx(inner).epsilon(1e-12));
  }
}

TEST_CASE("directional derivative matches the one-sided quotient") {
  // Dyadic construction keeps the sphere distances exact.
  rng::SplitMix64 stream(555);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + stream.below(3);
    const double w = (stream.below(2) == 0) ? 1.0 : 2.0;
    std::vector<double> z(d);
    for (double& v : z) v = 0.25 * static_cast<double>(stream.below(9));
    std::vector<double> flat;
    const std::size_t m_in = stream.below(4);
    for (std::size_t i = 0; i < m_in; ++i)
      for (std::size_t k = 0; k < d; ++k)
        flat.push_back(z[k] + 0.125 * (static_cast<double>(stream.below(7)) - 3.0));
    // One point exactly on the sphere along a random axis.
    const std::size_t axis = stream.below(d);
    std::vector<double> on(z);
    on[axis] += (stream.below(2) == 0) ? w : -w;
    for (double v : on) flat.push_back(v);
    const DataSet data(std::move(flat), d);

    std::vector<double> delta(d);
    for (double& v : delta) v = stream.normal();
    if (scan::sq_norm(delta) == 0.0) continue;

    const double dd = directional_derivative(data, z, delta, w);
    const double alpha = 1e-7 * w / std::sqrt(scan::sq_norm(delta));
    std::vector<double> zs(z);
    for (std::size_t k = 0; k < d; ++k) zs[k] += alpha * delta[k];
    const double quotient =
        (epanechnikov_loss(data, zs, w) - epanechnikov_loss(data, z, w)) / alpha;
    CHECK(std::abs(quotient - dd) <= 1e-4);
  }
}

TEST_CASE("stationarity certificates") {
  const DataSet sym = make1d({-1.0, 0.0, 1.0});
  const auto rep = stationarity_report(sym, std::vector<double>{0.0}, 1.0, 0.0);
  CHECK(rep.certificate == Stationarity::NonSmoothNotStationary);
  CHECK_FALSE(rep.is_smooth_point);
  REQUIRE(rep.descent_direction.has_value());
  CHECK((*rep.descent_direction)[0] == -1.0);
  CHECK(directional_derivative(sym, std::vector<double>{0.0},
                               *rep.descent_direction, 1.0) == -2.0);

  const DataSet pair = make1d({0.0, 0.4});
  const auto mean_rep =
      stationarity_report(pair, std::vector<double>{0.4 / 2.0}, 1.0, 0.0);
  CHECK(mean_rep.certificate == Stationarity::LocalMin);
  CHECK(mean_rep.is_local_minimum);
  CHECK(mean_rep.is_smooth_point);

  const DataSet single = make1d({0.0});
  const auto empty_rep =
      stationarity_report(single, std::vector<double>{5.0}, 1.0, 0.0);
  CHECK(empty_rep.certificate == Stationarity::EmptyInlierGlobalMax);
  CHECK(epanechnikov_loss(single, std::vector<double>{5.0}, 1.0) == 1.0);

  const auto off_rep = stationarity_report(pair, std::vector<double>{0.1}, 1.0, 0.0);
  CHECK(off_rep.certificate == Stationarity::SmoothNotStationary);
  REQUIRE(off_rep.descent_direction.has_value());
  const double dd = directional_derivative(pair, std::vector<double>{0.1},
                                           *off_rep.descent_direction, 1.0);
  CHECK(dd < 0.0);
}

TEST_CASE("every constructed non-smooth point admits strict descent") {
  rng::SplitMix64 stream(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + stream.below(3);
    const double w = (stream.below(2) == 0) ? 0.5 : 1.0;
    std::vector<double> z(d);
    for (double& v : z) v = 0.5 * static_cast<double>(stream.below(5));
    std::vector<double> flat;
    const std::size_t extra = stream.below(5);
    for (std::size_t i = 0; i < extra; ++i)
      for (std::size_t k = 0; k < d; ++k)
        flat.push_back(z[k] + 0.25 * (static_cast<double>(stream.below(9)) - 4.0));
    const std::size_t on_sphere = 1 + stream.below(2);
    for (std::size_t i = 0; i < on_sphere; ++i) {
      std::vector<double> on(z);
      on[stream.below(d)] += (stream.below(2) == 0) ? w : -w;
      for (double v : on) flat.push_back(v);
    }
    const DataSet data(std::move(flat), d);
    const auto rep = stationarity_report(data, z, w, 0.0);
    REQUIRE(rep.certificate == Stationarity::NonSmoothNotStationary);
    REQUIRE(rep.descent_direction.has_value());
    CHECK(directional_derivative(data, z, *rep.descent_direction, w) < 0.0);
  }
}

TEST_CASE("local convexity within an inlier-stable ball") {
  rng::SplitMix64 stream(47);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 3 + stream.below(20);
    const std::size_t d = 1 + stream.below(3);
    const DataSet data = random_points(stream.next_u64(), m, d);
    const double w = 0.5 + stream.unit();
    std::vector<double> z(d);
    for (double& v : z) v = stream.normal();
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i)
      gap = std::min(gap, std::abs(reference::squared_dist(data.point(i), z) - w * w));
    if (gap < 1e-4) continue;
    const auto g = loss_gradient(data, z, w);
    const double f0 = epanechnikov_loss(data, z, w);
    for (int probe = 0; probe < 5; ++probe) {
      std::vector<double> zp(z);
      double step2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double s = 1e-4 * stream.normal();
        zp[k] += s;
        step2 += s * s;
      }
      const NeighborSplit a = classify_neighbors(data, z, w, 0.0);
      const NeighborSplit b = classify_neighbors(data, zp, w, 0.0);
      if (a.inliers != b.inliers) continue;
      double linear = f0;
      for (std::size_t k = 0; k < d; ++k) linear += g[k] * (zp[k] - z[k]);
      CHECK(epanechnikov_loss(data, zp, w) >= linear - 1e-10);
    }
  }
}

TEST_CASE("kernel normalizing constants") {
  const KdeModel e1 = KdeModel::make(Kernel::Epanechnikov, 1.0, 1);
  CHECK(e1.norm_const == doctest::Approx(0.75).epsilon(1e-15));
  const KdeModel e2 = KdeModel::make(Kernel::Epanechnikov, 1.0, 2);
  CHECK(e2.norm_const == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-14));
  const KdeModel g3 = KdeModel::make(Kernel::Gaussian, 2.0, 3);
  CHECK(g3.norm_const ==
        doctest::Approx(std::pow(2.0 * std::numbers::pi, -1.5)).epsilon(1e-14));

  // Monte Carlo quadrature: the kernel integrates to one for d <= 3.
  rng::SplitMix64 stream(8);
  for (std::size_t d = 1; d <= 3; ++d) {
    for (const Kernel kern : {Kernel::Epanechnikov, Kernel::Gaussian}) {
      const double w = 0.8;
      const KdeModel model = KdeModel::make(kern, w, d);
      const double c_over_wd = model.norm_const / std::pow(w, double(d));
      const double half = kern == Kernel::Epanechnikov ? w : 8.0 * w;
      const std::size_t n = 400000;
      double acc = 0.0;
      std::vector<double> u(d);
      for (std::size_t s = 0; s < n; ++s) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          u[k] = half * (2.0 * stream.unit() - 1.0);
          d2 += u[k] * u[k];
        }
        if (kern == Kernel::Epanechnikov)
          acc += c_over_wd * std::max(1.0 - d2 / (w * w), 0.0);
        else
          acc += c_over_wd * std::exp(-d2 / (2.0 * w * w));
      }
      const double volume = std::pow(2.0 * half, double(d));
      CHECK(acc / double(n) * volume == doctest::Approx(1.0).epsilon(0.02));
    }
  }
}

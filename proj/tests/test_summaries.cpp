#include "doctest.h"

#include "oracles.hpp"
#include "stpp/rng.hpp"
#include "stpp/summaries.hpp"

#include <cmath>
#include <random>

using namespace stpp;

namespace {

IntensityField reference_field() { return IntensityField::log_linear(750.0, Eigen::Vector2d(0, -1.5), -1.5); }

// Points on a 1/1024 lattice so that shifts by integers are exact.
PointPattern dyadic_pattern(std::uint64_t seed, int n) {
  auto engine = make_engine(seed);
  std::uniform_int_distribution<int> k(0, 1024);
  std::vector<SpacetimePoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(make_point(k(engine) / 1024.0, k(engine) / 1024.0, k(engine) / 1024.0));
  return PointPattern(pts, Window::unit(2));
}

void check_same(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (std::isnan(a(i, j)) || std::isnan(b(i, j))) {
        CHECK(std::isnan(a(i, j)) == std::isnan(b(i, j)));
        continue;
      }
      CHECK(std::abs(a(i, j) - b(i, j)) <= tol);
    }
}

SummaryEstimate constant_estimate(const RangeGrid& g, double v) {
  SummaryEstimate e(g);
  e.F_hat.setConstant(v);
  e.G_hat.setConstant(v);
  e.J_hat.setConstant(v);
  e.K_hat.setConstant(v);
  return e;
}

}  // namespace

TEST_SUITE("summaries") {

TEST_CASE("range grid validation") {
  CHECK_THROWS(RangeGrid({0.1, 0.05}, {0.1}));
  CHECK_THROWS(RangeGrid({}, {0.1}));
  CHECK_THROWS(RangeGrid({-0.1}, {0.1}));
  const auto g = RangeGrid::regular(0.005, 20, 0.005, 20);
  CHECK(g.rows() == 20);
  CHECK(g.r.back() == doctest::Approx(0.1));
}

TEST_CASE("probe grid is a midpoint lattice inside the window") {
  const auto g = make_probe_grid(Window::unit(2));
  CHECK(g.probes.size() == 8000);
  CHECK(g.probes.front().space[0] == doctest::Approx(0.025));
  for (const auto& p : g.probes) CHECK(Window::unit(2).contains(p));
  CHECK_THROWS(make_probe_grid(Window::unit(2), {4, 4}));
}

TEST_CASE("trivial estimates") {
  const auto f = reference_field();
  const auto p = dyadic_pattern(1, 100);
  const auto grid = make_probe_grid(Window::unit(2));

  SUBCASE("zero ranges") {
    CHECK(*estimate_G(p, f, 0, 0).value == 0.0);
    CHECK(*estimate_F(p, f, grid, 0, 0).value == 0.0);
    CHECK(estimate_K(p, f, 0, 0) == 0.0);
  }
  SUBCASE("single point") {
    const PointPattern one({make_point(0.5, 0.5, 0.5)}, Window::unit(2));
    CHECK(*estimate_G(one, f, 0.1, 0.1).value == 0.0);
    CHECK(estimate_K(one, f, 0.1, 0.1) == 0.0);
  }
  SUBCASE("empty pattern") {
    const PointPattern none({}, Window::unit(2));
    CHECK(*estimate_F(none, f, grid, 0.1, 0.1).value == 0.0);
    const auto g = estimate_G(none, f, 0.1, 0.1);
    CHECK_FALSE(g.value.has_value());
    CHECK(g.count == 0);
    const auto e = estimate_J(none, f, grid, RangeGrid::regular(0.05, 2, 0.05, 2));
    CHECK((e.F_hat == 0.0).all());
    CHECK(e.G_hat.isNaN().all());
    CHECK(e.J_hat.isNaN().all());
  }
  SUBCASE("erosion beyond the window") {
    CHECK_THROWS_AS(estimate_G(p, f, 0.6, 0.1), EmptyErosion);
    CHECK_THROWS_AS(estimate_K(p, f, 0.1, 0.5), EmptyErosion);
  }
}

TEST_CASE("reweighting factors are checked") {
  const auto f = reference_field();
  const auto p = dyadic_pattern(2, 50);
  const double too_large = 2 * infimum(f, Window::unit(2)) * std::exp(3.0);
  CHECK_THROWS_AS(reweighted_product(p, f, too_large, make_point(0.5, 0.5, 0.5), 1.0, 1.0), InvalidIntensity);
  CHECK(reweighted_product(p, f, 0.0, make_point(0.5, 0.5, 0.5), 0.0, 0.0) == 1.0);
}

TEST_CASE("grid sweep agrees with the direct estimators") {
  const auto f = reference_field();
  const auto grid = make_probe_grid(Window::unit(2), {12, 12, 12});

  SUBCASE("poisson pattern") {
    const auto p = simulate_poisson(f, Window::unit(2), 11);
    const RangeGrid rt({0.01, 0.03, 0.05, 0.08, 0.1}, {0.02, 0.05, 0.1, 0.2});
    const auto e = estimate_J(p, f, grid, rt);
    for (std::size_t j = 0; j < rt.t.size(); ++j)
      for (std::size_t i = 0; i < rt.r.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const auto g = estimate_G(p, f, rt.r[i], rt.t[j]);
        const auto fe = estimate_F(p, f, grid, rt.r[i], rt.t[j]);
        CHECK(e.G_hat(ii, jj) == doctest::Approx(*g.value).epsilon(1e-12));
        CHECK(e.F_hat(ii, jj) == doctest::Approx(*fe.value).epsilon(1e-12));
        CHECK(e.n_centers(ii, jj) == static_cast<int>(g.count));
        CHECK(e.n_probes(ii, jj) == static_cast<int>(fe.count));
        CHECK(e.K_hat(ii, jj) == doctest::Approx(estimate_K(p, f, rt.r[i], rt.t[j])).epsilon(1e-12));
        CHECK(e.J_hat(ii, jj) == doctest::Approx((1 - *g.value) / (1 - *fe.value)).epsilon(1e-12));
      }
  }
  SUBCASE("neighbours exactly on the cylinder boundary") {
    std::vector<SpacetimePoint> pts;
    for (int a = 4; a < 12; ++a)
      for (int b = 4; b < 12; ++b)
        for (int c = 4; c < 12; ++c) pts.push_back(make_point(a / 16.0, b / 16.0, c / 16.0));
    const PointPattern p(pts, Window::unit(2));
    const auto flat = IntensityField::log_linear(500.0, Eigen::Vector2d(0.5, 0), 0.25);
    const RangeGrid rt({0.0625, 0.125, 0.1875}, {0.0625, 0.125});
    const auto e = estimate_J(p, flat, grid, rt);
    for (std::size_t j = 0; j < rt.t.size(); ++j)
      for (std::size_t i = 0; i < rt.r.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        CHECK(e.G_hat(ii, jj) == doctest::Approx(*estimate_G(p, flat, rt.r[i], rt.t[j]).value).epsilon(1e-12));
        CHECK(e.K_hat(ii, jj) == doctest::Approx(estimate_K(p, flat, rt.r[i], rt.t[j])).epsilon(1e-12));
      }
  }
}

TEST_CASE("products are monotone in r and t over a fixed center set") {
  const auto f = reference_field();
  const auto p = simulate_poisson(f, Window::unit(2), 5);
  const double lb = infimum(f, Window::unit(2));
  const auto probes = make_probe_grid(Window::unit(2), {6, 6, 6});
  for (const auto& c : probes.probes) {
    double prev_r = 1.0;
    for (double r = 0.0; r <= 0.1; r += 0.01) {
      const double v = reweighted_product(p, f, lb, c, r, 0.05);
      CHECK(v <= prev_r);
      prev_r = v;
    }
    double prev_t = 1.0;
    for (double t = 0.0; t <= 0.1; t += 0.01) {
      const double v = reweighted_product(p, f, lb, c, 0.05, t);
      CHECK(v <= prev_t);
      prev_t = v;
    }
  }
}

TEST_CASE("empty-space estimate is translation consistent") {
  const Eigen::Vector2d shift(1.0, -2.0);
  const double tshift = 4.0;
  const auto p = dyadic_pattern(3, 300);
  const auto base = reference_field();
  std::vector<SpacetimePoint> moved;
  for (const auto& q : p.points()) moved.push_back(SpacetimePoint(q.space + shift, q.time + tshift));
  const Window w2(Eigen::Vector2d(1, -2), Eigen::Vector2d(2, -1), 4, 5);
  const PointPattern p2(moved, w2);
  const auto g1 = make_probe_grid(Window::unit(2), {16, 16, 16});
  const auto g2 = make_probe_grid(w2, {16, 16, 16});
  const double lb = infimum(base, Window::unit(2)), ub = supremum(base, Window::unit(2));
  const auto f2 = IntensityField::custom(
      [&](const SpacetimePoint& q) { return base(SpacetimePoint(q.space - shift, q.time - tshift)); }, w2, lb, ub);
  const auto f1 = IntensityField::custom([&](const SpacetimePoint& q) { return base(q); }, Window::unit(2), lb, ub);
  for (double r : {0.03125, 0.0625, 0.1})
    for (double t : {0.03125, 0.0625, 0.1})
      CHECK(*estimate_F(p, f1, g1, r, t).value == *estimate_F(p2, f2, g2, r, t).value);
}

TEST_CASE("scaling equivariance") {
  const double cs = 2.0, ct = 0.5;
  const auto p = simulate_poisson(reference_field(), Window::unit(2), 17);
  const auto probes = make_probe_grid(Window::unit(2), {10, 10, 10});
  const RangeGrid rt({0.025, 0.05, 0.1}, {0.025, 0.05, 0.1});
  const RangeGrid rt_scaled({0.05, 0.1, 0.2}, {0.0125, 0.025, 0.05});
  for (const auto& f : {reference_field(), IntensityField::constant(200.0)}) {
    const auto a = estimate_J(p, f, probes, rt);
    const auto b = estimate_J(scale_pattern(p, cs, ct), scale_field(f, cs, ct), scale_test_grid(probes, cs, ct),
                              rt_scaled);
    check_same(a.F_hat, b.F_hat, 1e-12);
    check_same(a.G_hat, b.G_hat, 1e-12);
    check_same(a.J_hat, b.J_hat, 1e-12);
    check_same(a.K_hat * (cs * cs * ct), b.K_hat, 1e-12);
  }
  const auto w = scale_window(Window::unit(2), 2.0, 1.0);
  CHECK(w.hi()[0] == 2.0);
  CHECK(w.t_hi() == 1.0);
  CHECK_THROWS(scale_pattern(p, 0.0, 1.0));
  const auto same = scale_pattern(p, 1.0, 1.0);
  CHECK(same.points() == p.points());
}

TEST_CASE("poisson closed form for F and G") {
  const auto f = reference_field();
  const double lb = infimum(f, Window::unit(2));
  CHECK(lb == doctest::Approx(750.0 * std::exp(-3.0)));
  const auto probes = make_probe_grid(Window::unit(2));
  const RangeGrid rt({0.1}, {0.1});
  std::vector<double> F, G, ones;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto e = estimate_J(simulate_poisson(f, Window::unit(2), 3000 + s), f, probes, rt);
    F.push_back(e.F_hat(0, 0));
    G.push_back(e.G_hat(0, 0));
    ones.push_back(1.0);
  }
  const double target = oracle::poisson_F(lb, 0.1, 0.1);
  const auto mf = oracle::product_moment(F, ones), mg = oracle::product_moment(G, ones);
  CHECK(std::abs(mf.mean - target) <= 3 * mf.se);
  CHECK(std::abs(mg.mean - target) <= 3 * mg.se);
}

TEST_CASE("series representation") {
  const auto poisson = series_J(PoissonSeries{}, 37.3, 0.1, 0.1, 4, 1000, 1);
  CHECK(poisson.value == 1.0);
  CHECK(poisson.std_error == 0.0);
  CHECK_THROWS_AS(series_J(PoissonSeries{}, 37.3, 0.1, 0.1, 5, 1000, 1), std::out_of_range);
  CHECK_THROWS_AS(series_J(PoissonSeries{}, 37.3, 0.1, 0.1, -1, 1000, 1), std::out_of_range);

  const auto cov = CovarianceModel::separable_mult({0.25, 2.0}, {0.25, 1.0});
  const auto lgcp = series_J(LgcpSeries{cov}, 750.0 * std::exp(-3.0), 0.05, 0.05, 2, 20000, 3);
  CHECK(lgcp.value < 1.0);
  CHECK(lgcp.terms.size() == 2);
  CHECK(lgcp.terms[0] < 0.0);
  CHECK(std::abs(lgcp.terms[1]) < std::abs(lgcp.terms[0]));
  CHECK(lgcp.tail_decreasing);
  const auto none = series_J(LgcpSeries{cov}, 37.3, 0.05, 0.05, 0, 100, 3);
  CHECK(none.value == 1.0);
}

TEST_CASE("K from the pair correlation") {
  const auto flat = CovarianceModel::separable_mult({0.0, 2.0}, {0.0, 1.0});
  const auto k = K_from_pcf(flat, 0.1, 0.1);
  CHECK(k.value == doctest::Approx(2 * M_PI * 1e-3).epsilon(1e-12));
  CHECK(K_from_pcf(flat, 0.0, 0.1).value == 0.0);
  CHECK(K_from_pcf(flat, 0.1, 0.0).value == 0.0);
  const auto cov = CovarianceModel::separable_mult({0.25, 2.0}, {0.25, 1.0});
  const auto kl = K_from_pcf(cov, 0.1, 0.1);
  CHECK(kl.value > 2 * M_PI * 1e-3);
  CHECK(kl.error_estimate <= 1e-6 * kl.value);
}

TEST_CASE("second-order identity") {
  const auto cov = CovarianceModel::separable_mult({0.25, 2.0}, {0.25, 1.0});
  const double lb = 750.0 * std::exp(-3.0), r = 0.05, t = 0.05;
  const auto s = series_J(LgcpSeries{cov}, lb, r, t, 1, 40000, 9);
  const auto k = K_from_pcf(cov, r, t);
  const double target = 1.0 - lb * (k.value - 2 * M_PI * r * r * t);
  CHECK(std::abs(s.value - target) <= 3 * (s.std_error + lb * k.error_estimate));
}

TEST_CASE("pointwise envelope") {
  const RangeGrid g({0.1, 0.2}, {0.1});
  std::vector<SummaryEstimate> sims;
  for (int i = 0; i < 20; ++i) sims.push_back(constant_estimate(g, static_cast<double>(i)));

  SUBCASE("twenty simulations give the extremes") {
    const auto env = pointwise_envelope(sims, Statistic::J, 0.05);
    CHECK(env.lo(0, 0) == 0.0);
    CHECK(env.hi(0, 0) == 19.0);
    CHECK(env.n_defined(1, 0) == 20);
  }
  SUBCASE("wider level trims order statistics") {
    const auto env = pointwise_envelope(sims, Statistic::F, 0.2);
    CHECK(env.lo(0, 0) == 1.0);
    CHECK(env.hi(0, 0) == 18.0);
  }
  SUBCASE("missing cells") {
    for (int i = 0; i < 11; ++i) sims[static_cast<std::size_t>(i)].J_hat(0, 0) = std::nan("");
    for (int i = 0; i < 10; ++i) sims[static_cast<std::size_t>(i)].J_hat(1, 0) = std::nan("");
    const auto env = pointwise_envelope(sims, Statistic::J, 0.05);
    CHECK(std::isnan(env.lo(0, 0)));
    CHECK(env.n_defined(0, 0) == 9);
    CHECK(env.lo(1, 0) == 10.0);
    CHECK(env.hi(1, 0) == 19.0);
    CHECK(envelope_coverage(env, 12.0) == 1.0);
    CHECK(envelope_coverage(env, 5.0) == 0.0);
  }
  SUBCASE("mismatched grids and bad parameters") {
    sims.push_back(constant_estimate(RangeGrid({0.1}, {0.1}), 0.0));
    CHECK_THROWS(pointwise_envelope(sims, Statistic::J));
    sims.pop_back();
    CHECK_THROWS(pointwise_envelope(sims, Statistic::J, 1.5));
    CHECK_THROWS(envelope([&](std::uint64_t) { return sims[0]; }, Statistic::J, 19, 1));
  }
  CHECK(parse_statistic("K") == Statistic::K);
  CHECK(to_string(Statistic::G) == "G");
  CHECK_THROWS(parse_statistic("L"));
}

TEST_CASE("poisson envelope contains one") {
  const auto f = reference_field();
  const auto probes = make_probe_grid(Window::unit(2), {10, 10, 10});
  const auto rt = RangeGrid::regular(0.025, 4, 0.025, 4);
  const auto env = envelope(
      [&](std::uint64_t s) { return estimate_J(simulate_poisson(f, Window::unit(2), s), f, probes, rt); },
      Statistic::J, 39, 77, 0.05, 2);
  CHECK(env.n_sim == 39);
  CHECK(envelope_coverage(env, 1.0) >= 0.9);
}

TEST_CASE("hard-core pattern has no neighbours inside the hard core") {
  const HardCoreSpec spec;
  const auto p = simulate_hardcore(spec, Window::unit(2), 21);
  const auto g = estimate_G(p, IntensityField::constant(1000.0), spec.spatial_radius, spec.temporal_radius);
  REQUIRE(g.count > 0);
  CHECK(*g.value == 0.0);
}

TEST_CASE("conditional-intensity diagnostic") {
  const HardCoreSpec spec;
  const auto probes = make_probe_grid(Window::unit(2), {10, 10, 10});
  std::vector<PointPattern> chains;
  for (std::uint64_t s = 0; s < 4; ++s) chains.push_back(simulate_hardcore(spec, Window::unit(2), 40 + s));
  const double p_bar = std::exp(-3.0);
  const auto d = hardcore_papangelou(chains, spec, p_bar, probes, 0.025, 0.025);
  CHECK(d.beta_over_lambda >= 1.0);
  // lambda(a;Y) and W are both decreasing in Y.
  CHECK(d.covariance > 0.0);
  CHECK(std::abs(d.J - 1.0) < 0.05);
  CHECK(d.n_locations > 0);

  // Without an effective hard core every probe is unblocked and J = beta / lambda_hat.
  HardCoreSpec loose = spec;
  loose.spatial_radius = loose.temporal_radius = 1e-9;
  const auto e = hardcore_papangelou(chains, loose, p_bar, probes, 0.025, 0.025);
  CHECK(e.J == doctest::Approx(e.beta_over_lambda).epsilon(1e-12));
  CHECK(e.covariance == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS(hardcore_papangelou({}, spec, p_bar, probes, 0.025, 0.025));
  CHECK_THROWS(hardcore_papangelou(chains, spec, 0.0, probes, 0.025, 0.025));
}

}

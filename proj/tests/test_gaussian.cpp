#include "doctest.h"

#include "oracles.hpp"
#include "stpp/covariance.hpp"

#include <cmath>

using namespace stpp;

namespace {

CovarianceModel reference_cov() { return CovarianceModel::separable_mult({0.25, 2.0}, {0.25, 1.0}); }

}  // namespace

TEST_SUITE("gaussian") {

TEST_CASE("covariance families") {
  const auto m = reference_cov();
  CHECK(m.variance() == doctest::Approx(1.0 / 16.0));
  CHECK(m(0.5, 0.2) == doctest::Approx(0.25 * std::exp(-0.25) * 0.25 * std::exp(-0.2)));
  CHECK(m(0.5, -0.2) == m(0.5, 0.2));
  const auto a = CovarianceModel::separable_add({1.0, 1.0}, {2.0, 2.0});
  CHECK(a(1.0, 1.0) == doctest::Approx(std::exp(-1.0) + 2 * std::exp(-1.0)));
  const auto s = CovarianceModel::power_exponential_sup(2.0, 1.0);
  CHECK(s(0.3, 0.7) == doctest::Approx(2.0 * std::exp(-0.7)));
  CHECK(covariance(m, make_point(0.3, 0.4, 0.2)) == doctest::Approx(m(0.5, 0.2)));
  CHECK_THROWS(CovarianceModel::separable_mult({-1.0, 1.0}, {1.0, 1.0}));
}

TEST_CASE("continuity check") {
  CHECK(validate_continuity(reference_cov()).ok);
  CHECK_FALSE(validate_continuity(CovarianceModel::separable_mult({1, 0.0}, {1, 1})).ok);
  CHECK_FALSE(validate_continuity(CovarianceModel::separable_mult({1, 1}, {1, 2.5})).ok);
  CHECK(validate_continuity(CovarianceModel::power_exponential_sup(1.0, 2.0)).ok);
}

TEST_CASE("jittered Cholesky") {
  Eigen::MatrixXd pd(2, 2);
  pd << 2, 1, 1, 2;
  double jitter = -1;
  const auto l = jittered_cholesky(pd, &jitter);
  CHECK((l * l.transpose() - pd).norm() < 1e-8);
  CHECK(jitter == doctest::Approx(1e-10));
  const Eigen::MatrixXd rank_one = Eigen::MatrixXd::Ones(4, 4);
  CHECK_NOTHROW(jittered_cholesky(rank_one));
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(jittered_cholesky(bad), FactorizationError);
  CHECK(jittered_cholesky(Eigen::MatrixXd::Zero(3, 3)).isZero());
}

TEST_CASE("field lookup uses the containing cell, lower index on faces") {
  CellGrid g(Window::unit(2), {2, 2}, 2);
  GridField f{g, Eigen::MatrixXd(4, 2)};
  f.values << 0, 4, 1, 5, 2, 6, 3, 7;
  CHECK(field_at(f, make_point(0.1, 0.1, 0.1)) == 0);
  CHECK(field_at(f, make_point(0.9, 0.9, 0.9)) == 7);
  CHECK(field_at(f, make_point(0.5, 0.5, 0.5)) == 0);
  CHECK(field_at(f, make_point(0.50001, 0.1, 0.1)) == 1);
  CHECK_THROWS_AS(field_at(f, make_point(1.2, 0.1, 0.1)), OutsideDomain);
}

TEST_CASE("sampling is deterministic per seed") {
  CellGrid g(Window::unit(2), {6, 6}, 5);
  const SeparableFieldSampler s(reference_cov(), g);
  CHECK(s.sample(3).values == s.sample(3).values);
  CHECK(s.sample(3).values != s.sample(4).values);
  CHECK(simulate_grf(reference_cov(), g, 3).values == s.sample(3).values);
  CHECK_THROWS(simulate_grf_additive(reference_cov(), g, 3));
}

TEST_CASE("zero-variance component gives a zero field") {
  CellGrid g(Window::unit(2), {4, 4}, 4);
  const auto f = simulate_grf(CovarianceModel::separable_mult({0.25, 2.0}, {0.0, 1.0}), g, 1);
  CHECK(f.values.isZero());
}

TEST_CASE("Kronecker sampler reproduces the node covariance") {
  CellGrid g(Window::unit(2), {4, 4}, 4);
  const auto cov = reference_cov();
  const SeparableFieldSampler s(cov, g);
  const oracle::FullMatrixSampler full(cov, g);
  const int reps = 2000;
  const std::pair<int, int> pairs[] = {{0, 0}, {0, 1}, {0, 5}, {3, 3 + 16 * 2}, {7, 40}};
  std::vector<std::vector<double>> ka(5), kb(5), fa(5), fb(5);
  for (int r = 0; r < reps; ++r) {
    const Eigen::MatrixXd mk = s.sample(static_cast<std::uint64_t>(r)).values;
    const Eigen::MatrixXd mf = full.sample(static_cast<std::uint64_t>(r));
    const auto zk = mk.reshaped();
    const auto zf = mf.reshaped();
    for (int p = 0; p < 5; ++p) {
      ka[p].push_back(zk[pairs[p].first]);
      kb[p].push_back(zk[pairs[p].second]);
      fa[p].push_back(zf[pairs[p].first]);
      fb[p].push_back(zf[pairs[p].second]);
    }
  }
  for (int p = 0; p < 5; ++p) {
    const auto a = pairs[p].first, b = pairs[p].second;
    const double truth = cov((g.spatial_node(a % 16) - g.spatial_node(b % 16)).norm(),
                             g.time_node(a / 16) - g.time_node(b / 16));
    const auto k = oracle::product_moment(ka[p], kb[p]);
    const auto f = oracle::product_moment(fa[p], fb[p]);
    CHECK(std::abs(k.mean - truth) <= 4 * k.se);
    CHECK(std::abs(k.mean - f.mean) <= 4 * std::hypot(k.se, f.se));
  }
}

TEST_CASE("node means vanish on the 16 x 16 x 16 grid") {
  CellGrid g(Window::unit(2), {16, 16}, 16);
  const SeparableFieldSampler s(reference_cov(), g);
  const int reps = 500;
  Eigen::ArrayXXd sum = Eigen::ArrayXXd::Zero(256, 16), sq = sum;
  for (int r = 0; r < reps; ++r) {
    const Eigen::ArrayXXd z = s.sample(static_cast<std::uint64_t>(10'000 + r)).values.array();
    sum += z;
    sq += z.square();
  }
  const Eigen::ArrayXXd mean = sum / reps;
  const Eigen::ArrayXXd se = ((sq / reps - mean.square()) / (reps - 1)).sqrt();
  CHECK((mean.abs() <= 3 * se).all());
}

TEST_CASE("additive model variance") {
  CellGrid g(Window::unit(2), {3, 3}, 3);
  const auto cov = CovarianceModel::separable_add({0.5, 1.0}, {0.25, 1.0});
  std::vector<double> v;
  for (int r = 0; r < 3000; ++r) v.push_back(simulate_grf_additive(cov, g, static_cast<std::uint64_t>(r)).values(4, 1));
  const auto m = oracle::product_moment(v, v);
  CHECK(std::abs(m.mean - 0.75) <= 4 * m.se);
}

}

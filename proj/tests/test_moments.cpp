#include "doctest.h"

#include "stpp/moments.hpp"

#include <cmath>
#include <set>

using namespace stpp;

namespace {

std::vector<SpacetimePoint> sample_points(int n) {
  std::vector<SpacetimePoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back(make_point(0.1 * i + 0.03 * i * i, 0.2 - 0.07 * i, 0.05 * (i + 1)));
  return pts;
}

// Symmetric test function of a sub-tuple of size >= 2.
double toy_xi(std::span<const SpacetimePoint> s) {
  REQUIRE(s.size() >= 2);
  double sum = 0.0, prod = 1.0;
  for (const auto& p : s) {
    sum += p.space[0] + 2 * p.space[1] + p.time;
    prod *= 1.0 + p.time;
  }
  return std::sin(sum) * static_cast<double>(s.size()) + 0.3 * prod;
}

// Explicit inversion: xi(S) = sum over partitions of (-1)^(k-1) (k-1)! prod rho(B).
double mobius_oracle(std::span<const SpacetimePoint> pts, const SubtupleFunction& rho) {
  double total = 0.0;
  for (const auto& part : enumerate_partitions(static_cast<int>(pts.size()))) {
    const auto k = static_cast<int>(part.size());
    double term = std::tgamma(k) * ((k - 1) % 2 ? -1.0 : 1.0);
    for (const auto& block : part) {
      std::vector<SpacetimePoint> sub;
      for (int i : block) sub.push_back(pts[static_cast<std::size_t>(i)]);
      term *= sub.size() == 1 ? 1.0 : rho(sub);
    }
    total += term;
  }
  return total;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("Bell numbers") {
  const std::uint64_t expected[] = {1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975};
  for (int n = 1; n <= 10; ++n) CHECK(bell_number(n) == expected[n - 1]);
}

TEST_CASE("partition enumeration is complete and canonical") {
  for (int n = 1; n <= 7; ++n) {
    const auto parts = enumerate_partitions(n);
    REQUIRE(parts.size() == bell_number(n));
    std::set<SetPartition> seen;
    for (const auto& p : parts) {
      std::vector<int> hits(static_cast<std::size_t>(n), 0);
      int last_min = -1;
      for (const auto& block : p) {
        REQUIRE_FALSE(block.empty());
        CHECK(block.front() > last_min);
        last_min = block.front();
        for (std::size_t i = 1; i < block.size(); ++i) CHECK(block[i] > block[i - 1]);
        for (int v : block) ++hits[static_cast<std::size_t>(v)];
      }
      for (int h : hits) CHECK(h == 1);
      seen.insert(p);
    }
    CHECK(seen.size() == parts.size());
  }
  CHECK(enumerate_partitions(10).size() == 115975);
  CHECK_THROWS_AS(enumerate_partitions(0), std::out_of_range);
  CHECK_THROWS_AS(enumerate_partitions(11), std::out_of_range);
}

TEST_CASE("normalised density from xi never evaluates singletons") {
  const auto pts = sample_points(4);
  CHECK_NOTHROW(xi_to_normalized_density(pts, toy_xi));
  const auto one = sample_points(1);
  CHECK(xi_to_normalized_density(one, toy_xi) == 1.0);
}

TEST_CASE("round trip between xi and normalised densities") {
  for (int n = 2; n <= 5; ++n) {
    const auto pts = sample_points(n);
    const SubtupleFunction rho = [](std::span<const SpacetimePoint> s) {
      return xi_to_normalized_density(s, toy_xi);
    };
    const double back = normalized_density_to_xi(pts, rho);
    CHECK(std::abs(back - toy_xi(pts)) <= 1e-12 * std::max(1.0, std::abs(toy_xi(pts))));
    CHECK(std::abs(back - mobius_oracle(pts, rho)) <= 1e-12 * std::max(1.0, std::abs(back)));
  }
}

TEST_CASE("log-Gaussian Cox correlation functions") {
  const auto cov = CovarianceModel::separable_mult({0.25, 2.0}, {0.25, 1.0});
  const auto pts = sample_points(3);
  auto g = [&](int i, int j) {
    const auto& a = pts[static_cast<std::size_t>(i)];
    const auto& b = pts[static_cast<std::size_t>(j)];
    return std::exp(cov((a.space - b.space).norm(), a.time - b.time));
  };
  std::span<const SpacetimePoint> two(pts.data(), 2);
  CHECK(lgcp_normalized_density(two, cov) == doctest::Approx(g(0, 1)));
  CHECK(lgcp_xi(two, cov) == doctest::Approx(g(0, 1) - 1.0));
  const double xi3 = g(0, 1) * g(0, 2) * g(1, 2) - g(0, 1) - g(0, 2) - g(1, 2) + 2.0;
  CHECK(lgcp_xi(pts, cov) == doctest::Approx(xi3).epsilon(1e-12));
  CHECK(lgcp_xi(sample_points(6), cov) > 0.0);
  CHECK_THROWS(lgcp_xi(sample_points(7), cov));
}

}

#include "doctest.h"

#include "stpp/intensity.hpp"

#include <cmath>

using namespace stpp;

namespace {

IntensityField reference_field() { return IntensityField::log_linear(750.0, Eigen::Vector2d(0, -1.5), -1.5); }

// Composite midpoint rule over the window, independent of the library code.
double midpoint_integral(const IntensityField& f, const Window& w, int n) {
  double sum = 0.0;
  const Eigen::Vector2d h = w.side_lengths() / n;
  const double ht = w.duration() / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        sum += f(make_point(w.lo()[0] + (i + 0.5) * h[0], w.lo()[1] + (j + 0.5) * h[1], w.t_lo() + (k + 0.5) * ht));
  return sum * h.prod() * ht;
}

}  // namespace

TEST_SUITE("intensity") {

TEST_CASE("log-linear evaluation and bounds on the unit cube") {
  const auto f = reference_field();
  const Window w = Window::unit(2);
  CHECK(f(make_point(0.3, 0, 0)) == doctest::Approx(750.0));
  CHECK(f(make_point(0.3, 1, 1)) == doctest::Approx(750.0 * std::exp(-3.0)));
  CHECK(infimum(f, w) == doctest::Approx(37.3403).epsilon(1e-5));
  CHECK(supremum(f, w) == doctest::Approx(750.0));
}

TEST_CASE("expected count of the log-linear field") {
  const auto f = reference_field();
  const double closed = 750.0 * std::pow((1 - std::exp(-1.5)) / 1.5, 2);
  CHECK(closed == doctest::Approx(201.18).epsilon(1e-4));
  CHECK(std::abs(closed - 200.0) < 2.0);
  CHECK(integrate(f, Window::unit(2)) == doctest::Approx(closed).epsilon(1e-12));
  const Window w(Eigen::Vector2d(0.2, -0.5), Eigen::Vector2d(0.7, 0.1), -1, 0.5);
  CHECK(integrate(f, w) == doctest::Approx(midpoint_integral(f, w, 80)).epsilon(1e-4));
}

TEST_CASE("constant field") {
  const auto f = IntensityField::constant(3.0);
  CHECK(integrate(f, Window::unit(2)) == doctest::Approx(3.0));
  CHECK(infimum(f, Window::unit(2)) == 3.0);
  CHECK_THROWS_AS(IntensityField::constant(0.0), InvalidIntensity);
  CHECK_THROWS_AS(IntensityField::constant(-1.0), InvalidIntensity);
}

TEST_CASE("custom field integrates by quadrature to the closed form") {
  const auto g = reference_field();
  const auto f = IntensityField::custom([g](const SpacetimePoint& p) { return g(p); }, Window::unit(2),
                                        750.0 * std::exp(-3.0), 750.0);
  CHECK(integrate(f, Window::unit(2)) == doctest::Approx(integrate(g, Window::unit(2))).epsilon(1e-8));
  CHECK(infimum(f, Window::unit(2)) == doctest::Approx(750.0 * std::exp(-3.0)));
  CHECK_THROWS_AS(f(make_point(1.5, 0.5, 0.5)), OutsideDomain);
}

TEST_CASE("product grid table") {
  CellGrid grid(Window::unit(2), {2, 2}, 2);
  Eigen::VectorXd values(8);
  values << 1, 2, 3, 4, 5, 6, 7, 8;
  const auto f = IntensityField::product_grid(grid, values, 0.5);
  CHECK(f(make_point(0.25, 0.25, 0.25)) == 1.0);
  CHECK(f(make_point(0.75, 0.25, 0.25)) == 2.0);
  CHECK(f(make_point(0.25, 0.75, 0.25)) == 3.0);
  CHECK(f(make_point(0.75, 0.75, 0.75)) == 8.0);
  // Shared faces belong to the lower cell.
  CHECK(f(make_point(0.5, 0.25, 0.25)) == 1.0);
  CHECK(infimum(f, Window::unit(2)) == doctest::Approx(0.5));
  CHECK(supremum(f, Window::unit(2)) == 8.0);
  CHECK(integrate(f, Window::unit(2)) == doctest::Approx(36.0 / 8.0));
  const Window quarter(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1, 1), 0.5, 1);
  CHECK(integrate(f, quarter) == doctest::Approx(8.0 / 8.0));
  CHECK(infimum(f, quarter) == doctest::Approx(7.5));
}

TEST_CASE("cell grid nodes are cell centers") {
  CellGrid g(Window::unit(2), {4, 2}, 5);
  CHECK(g.spatial_cells() == 8);
  CHECK(g.spatial_node(0)[0] == doctest::Approx(0.125));
  CHECK(g.spatial_node(5)[0] == doctest::Approx(0.375));
  CHECK(g.spatial_node(5)[1] == doctest::Approx(0.75));
  CHECK(g.time_node(4) == doctest::Approx(0.9));
  CHECK(g.time_cell_of(0.0) == 0);
  CHECK(g.time_cell_of(0.2) == 0);
  CHECK(g.time_cell_of(0.2000001) == 1);
  CHECK(g.time_cell_of(1.0) == 4);
}

TEST_CASE("scaling a field multiplies every value") {
  const auto f = reference_field().scaled(2.0);
  CHECK(f(make_point(0, 0, 0)) == doctest::Approx(1500.0));
  CHECK_THROWS(reference_field().scaled(0.0));
}

TEST_CASE("kernel estimate is floored and keeps the point mass") {
  std::vector<SpacetimePoint> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(make_point(0.02 + 0.024 * i, 0.5 + 0.01 * (i % 7), 0.03 + 0.023 * i));
  const PointPattern p(pts, Window::unit(2));
  const auto f = kernel_estimate(p, {0.1, 0.1}, 1e-6, {16, 16}, 16);
  CHECK(infimum(f, Window::unit(2)) == doctest::Approx(1e-6));
  CHECK(integrate(f, Window::unit(2)) == doctest::Approx(40.0).epsilon(1e-7));
  for (const auto& q : pts) CHECK(f(q) > 0.0);
  CHECK_THROWS(kernel_estimate(PointPattern(Window::unit(2)), {0.1, 0.1}, 1e-6));
}

}

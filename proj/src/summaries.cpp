#include "stpp/summaries.hpp"

#include "stpp/moments.hpp"
#include "stpp/parallel.hpp"
#include "stpp/quadrature.hpp"
#include "stpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace stpp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_radius(double r, double t) {
  if (!(r >= 0) || !(t >= 0) || !std::isfinite(r) || !std::isfinite(t))
    throw std::invalid_argument("ranges r and t must be finite and nonnegative");
}

void require_increasing(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw std::invalid_argument(std::string("range grid: empty ") + name + " axis");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0) || !std::isfinite(v[i]))
      throw std::invalid_argument(std::string("range grid: ") + name + " values must be >= 0");
    if (i > 0 && !(v[i] > v[i - 1]))
      throw std::invalid_argument(std::string("range grid: ") + name + " must be strictly increasing");
  }
}

// 1 - lambda_bar / lambda for every point, checked to lie in [0, 1).
std::vector<double> reweighting_factors(const PointPattern& p, const IntensityField& f,
                                        double lambda_bar) {
  std::vector<double> w(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lambda = f(p[i]);
    const double factor = 1.0 - lambda_bar / lambda;
    if (!(factor >= 0.0 && factor < 1.0))
      throw InvalidIntensity("lambda_bar exceeds lambda at a pattern point (factor " +
                             std::to_string(factor) + ")");
    w[i] = factor;
  }
  return w;
}

bool within(const SpacetimePoint& a, const SpacetimePoint& b, double r, double t) {
  return std::abs(a.time - b.time) <= t && (a.space - b.space).norm() <= r;
}

// Points sorted by time (stable, ties by index) for windowed neighbour scans.
struct TimeIndex {
  std::vector<std::size_t> order;
  std::vector<double> times;

  explicit TimeIndex(const PointPattern& p) : order(p.size()) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a].time < p[b].time; });
    times.reserve(order.size());
    for (auto i : order) times.push_back(p[i].time);
  }

  std::size_t first_at_least(double t) const {
    return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
  }
};

std::size_t first_geq(const std::vector<double>& grid, double v) {
  return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());
}

// Bucketed neighbour contributions of one center, cumulated over the grid.
class CellAccumulator {
public:
  CellAccumulator(Eigen::Index rows, Eigen::Index cols) : buckets_(rows, cols) {}

  void reset(double value) { buckets_.setConstant(value); }
  Eigen::ArrayXXd& buckets() { return buckets_; }

  void prefix_product() {
    for (Eigen::Index j = 0; j < buckets_.cols(); ++j)
      for (Eigen::Index i = 1; i < buckets_.rows(); ++i) buckets_(i, j) *= buckets_(i - 1, j);
    for (Eigen::Index j = 1; j < buckets_.cols(); ++j)
      for (Eigen::Index i = 0; i < buckets_.rows(); ++i) buckets_(i, j) *= buckets_(i, j - 1);
  }

  void prefix_sum() {
    for (Eigen::Index j = 0; j < buckets_.cols(); ++j)
      for (Eigen::Index i = 1; i < buckets_.rows(); ++i) buckets_(i, j) += buckets_(i - 1, j);
    for (Eigen::Index j = 1; j < buckets_.cols(); ++j)
      for (Eigen::Index i = 0; i < buckets_.rows(); ++i) buckets_(i, j) += buckets_(i, j - 1);
  }

private:
  Eigen::ArrayXXd buckets_;
};

}  // namespace

RangeGrid::RangeGrid(std::vector<double> r_values, std::vector<double> t_values)
    : r(std::move(r_values)), t(std::move(t_values)) {
  require_increasing(r, "r");
  require_increasing(t, "t");
}

RangeGrid RangeGrid::regular(double r_step, int r_count, double t_step, int t_count) {
  if (r_count < 1 || t_count < 1 || !(r_step > 0) || !(t_step > 0))
    throw std::invalid_argument("regular range grid needs positive steps and counts");
  std::vector<double> r(static_cast<std::size_t>(r_count)), t(static_cast<std::size_t>(t_count));
  for (int i = 0; i < r_count; ++i) r[static_cast<std::size_t>(i)] = r_step * (i + 1);
  for (int j = 0; j < t_count; ++j) t[static_cast<std::size_t>(j)] = t_step * (j + 1);
  return RangeGrid(std::move(r), std::move(t));
}

TestGrid make_probe_grid(const Window& w, const std::vector<int>& counts) {
  const auto d = static_cast<std::size_t>(w.dim());
  if (counts.size() != d + 1) throw DimensionMismatch("probe grid needs one count per axis plus time");
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("probe grid counts must be >= 1");
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  TestGrid g;
  g.probes.reserve(total);
  std::vector<int> idx(d + 1, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      x[kk] = w.lo()[kk] + (idx[k] + 0.5) * (w.hi()[kk] - w.lo()[kk]) / counts[k];
    }
    const double t = w.t_lo() + (idx[d] + 0.5) * w.duration() / counts[d];
    g.probes.emplace_back(std::move(x), t);
    for (std::size_t k = 0; k <= d; ++k) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
  }
  return g;
}

TestGrid make_probe_grid(const Window& w) {
  return make_probe_grid(w, std::vector<int>(static_cast<std::size_t>(w.dim()) + 1, 20));
}

double reweighted_product(const PointPattern& p, const IntensityField& f, double lambda_bar,
                          const SpacetimePoint& center, double r, double t,
                          std::optional<std::size_t> exclude) {
  double prod = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (exclude && *exclude == i) continue;
    if (!within(center, p[i], r, t)) continue;
    const double factor = 1.0 - lambda_bar / f(p[i]);
    if (!(factor >= 0.0 && factor < 1.0))
      throw InvalidIntensity("lambda_bar exceeds lambda at a pattern point");
    prod *= factor;
  }
  return prod;
}

PointEstimate estimate_G(const PointPattern& p, const IntensityField& f, double r, double t) {
  require_radius(r, t);
  const auto& w = p.window();
  if (!erosion_nonempty(w, r, t)) throw EmptyErosion("estimate_G: eroded window is empty");
  const double lambda_bar = infimum(f, w);
  PointEstimate out;
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!in_eroded(w, p[c], r, t)) continue;
    sum += reweighted_product(p, f, lambda_bar, p[c], r, t, c);
    ++out.count;
  }
  if (out.count > 0) out.value = 1.0 - sum / static_cast<double>(out.count);
  return out;
}

PointEstimate estimate_F(const PointPattern& p, const IntensityField& f, const TestGrid& grid,
                         double r, double t) {
  require_radius(r, t);
  const auto& w = p.window();
  if (!erosion_nonempty(w, r, t)) throw EmptyErosion("estimate_F: eroded window is empty");
  const double lambda_bar = infimum(f, w);
  PointEstimate out;
  double sum = 0.0;
  for (const auto& probe : grid.probes) {
    if (!in_eroded(w, probe, r, t)) continue;
    sum += reweighted_product(p, f, lambda_bar, probe, r, t, std::nullopt);
    ++out.count;
  }
  if (out.count > 0) out.value = 1.0 - sum / static_cast<double>(out.count);
  return out;
}

double estimate_K(const PointPattern& p, const IntensityField& f, double r, double t) {
  require_radius(r, t);
  const Window a = erode_window(p.window(), r, t);
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!in_eroded(p.window(), p[c], r, t)) continue;
    const double lc = f(p[c]);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i == c || !within(p[c], p[i], r, t)) continue;
      sum += 1.0 / (lc * f(p[i]));
    }
  }
  return sum / a.volume();
}

SummaryEstimate::SummaryEstimate(RangeGrid g)
    : grid(std::move(g)),
      F_hat(Eigen::ArrayXXd::Constant(grid.rows(), grid.cols(), kNaN)),
      G_hat(F_hat),
      J_hat(F_hat),
      K_hat(F_hat),
      n_centers(Eigen::ArrayXXi::Zero(grid.rows(), grid.cols())),
      n_probes(n_centers) {}

SummaryEstimate estimate_J(const PointPattern& p, const IntensityField& f, const TestGrid& grid,
                           const RangeGrid& rt) {
  const auto& w = p.window();
  const double lambda_bar = infimum(f, w);
  const std::vector<double> factor = reweighting_factors(p, f, lambda_bar);
  std::vector<double> inv_lambda(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv_lambda[i] = 1.0 / f(p[i]);

  const Eigen::Index R = rt.rows(), T = rt.cols();
  const double r_max = rt.r.back(), t_max = rt.t.back();
  const TimeIndex index(p);

  Eigen::ArrayXXd g_sum = Eigen::ArrayXXd::Zero(R, T), f_sum = g_sum, k_sum = g_sum;
  Eigen::ArrayXXi n_c = Eigen::ArrayXXi::Zero(R, T), n_p = n_c;
  CellAccumulator prod(R, T), pairs(R, T);

  // Cells whose eroded window holds `x`, added with `add(i, j)`.
  auto for_each_cell = [&](const SpacetimePoint& x, auto&& add) {
    for (Eigen::Index j = 0; j < T; ++j)
      for (Eigen::Index i = 0; i < R; ++i)
        if (in_eroded(w, x, rt.r[static_cast<std::size_t>(i)], rt.t[static_cast<std::size_t>(j)]))
          add(i, j);
  };

  // Visits neighbours of x within (r_max, t_max) in time order; fn(point index, bucket i, j).
  auto scan = [&](const SpacetimePoint& x, std::optional<std::size_t> self, auto&& fn) {
    for (std::size_t q = index.first_at_least(x.time - t_max); q < index.order.size(); ++q) {
      if (index.times[q] > x.time + t_max) break;
      const std::size_t i = index.order[q];
      if (self && *self == i) continue;
      const double dt = std::abs(p[i].time - x.time);
      const double ds = (p[i].space - x.space).norm();
      if (dt > t_max || ds > r_max) continue;
      fn(i, static_cast<Eigen::Index>(first_geq(rt.r, ds)),
         static_cast<Eigen::Index>(first_geq(rt.t, dt)));
    }
  };

  for (std::size_t c = 0; c < p.size(); ++c) {
    const auto& x = p[c];
    if (!in_eroded(w, x, rt.r.front(), rt.t.front())) continue;
    prod.reset(1.0);
    pairs.reset(0.0);
    bool any = false;
    scan(x, c, [&](std::size_t i, Eigen::Index bi, Eigen::Index bj) {
      prod.buckets()(bi, bj) *= factor[i];
      pairs.buckets()(bi, bj) += inv_lambda[c] * inv_lambda[i];
      any = true;
    });
    if (any) {
      prod.prefix_product();
      pairs.prefix_sum();
    }
    for_each_cell(x, [&](Eigen::Index i, Eigen::Index j) {
      g_sum(i, j) += prod.buckets()(i, j);
      k_sum(i, j) += pairs.buckets()(i, j);
      ++n_c(i, j);
    });
  }

  for (const auto& probe : grid.probes) {
    if (!in_eroded(w, probe, rt.r.front(), rt.t.front())) continue;
    prod.reset(1.0);
    bool any = false;
    scan(probe, std::nullopt, [&](std::size_t i, Eigen::Index bi, Eigen::Index bj) {
      prod.buckets()(bi, bj) *= factor[i];
      any = true;
    });
    if (any) prod.prefix_product();
    for_each_cell(probe, [&](Eigen::Index i, Eigen::Index j) {
      f_sum(i, j) += prod.buckets()(i, j);
      ++n_p(i, j);
    });
  }

  SummaryEstimate out(rt);
  out.lambda_bar = lambda_bar;
  out.n_centers = n_c;
  out.n_probes = n_p;
  for (Eigen::Index j = 0; j < T; ++j) {
    for (Eigen::Index i = 0; i < R; ++i) {
      const double r = rt.r[static_cast<std::size_t>(i)], t = rt.t[static_cast<std::size_t>(j)];
      if (!erosion_nonempty(w, r, t)) continue;
      out.K_hat(i, j) = k_sum(i, j) / erode_window(w, r, t).volume();
      const double one_minus_g = n_c(i, j) > 0 ? g_sum(i, j) / n_c(i, j) : kNaN;
      const double one_minus_f = n_p(i, j) > 0 ? f_sum(i, j) / n_p(i, j) : kNaN;
      if (n_c(i, j) > 0) out.G_hat(i, j) = 1.0 - one_minus_g;
      if (n_p(i, j) > 0) out.F_hat(i, j) = 1.0 - one_minus_f;
      if (n_c(i, j) > 0 && n_p(i, j) > 0 && one_minus_f != 0.0)
        out.J_hat(i, j) = one_minus_g / one_minus_f;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SpacetimePoint uniform_in_cylinder(int d, double r, double t, Engine& engine) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Eigen::VectorXd x(d);
  double norm = 0.0;
  do {
    for (int k = 0; k < d; ++k) x[k] = normal(engine);
    norm = x.norm();
  } while (norm == 0.0);
  x *= r * std::pow(unit(engine), 1.0 / d) / norm;
  return SpacetimePoint(std::move(x), t * (2.0 * unit(engine) - 1.0));
}

}  // namespace

SeriesResult series_J(const SeriesModel& model, double lambda_bar, double r, double t, int n_max,
                      std::int64_t mc_samples, std::uint64_t seed, int dim) {
  if (n_max < 0 || n_max > 4) throw std::out_of_range("series_J: N_max must lie in [0, 4]");
  require_radius(r, t);
  if (!(lambda_bar >= 0)) throw std::invalid_argument("series_J: lambda_bar must be >= 0");
  if (dim < 1) throw std::invalid_argument("series_J: dimension must be >= 1");
  SeriesResult out;
  out.terms.assign(static_cast<std::size_t>(n_max), 0.0);
  out.term_errors.assign(static_cast<std::size_t>(n_max), 0.0);
  if (n_max == 0 || std::holds_alternative<PoissonSeries>(model)) return out;
  if (mc_samples < 2) throw std::invalid_argument("series_J: need at least 2 Monte Carlo samples");

  const auto& cov = std::get<LgcpSeries>(model).cov;
  const double ell = cylinder_volume(dim, r, t);
  std::vector<double> coef(static_cast<std::size_t>(n_max));
  double c = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    c *= -lambda_bar * ell / n;
    coef[static_cast<std::size_t>(n - 1)] = c;
  }

  auto engine = make_engine(seed);
  const auto N = static_cast<std::size_t>(n_max);
  std::vector<double> mean(N, 0.0), m2(N, 0.0);
  double total_mean = 0.0, total_m2 = 0.0;
  std::vector<SpacetimePoint> tuple;
  for (std::int64_t s = 0; s < mc_samples; ++s) {
    tuple.assign(1, SpacetimePoint(Eigen::VectorXd::Zero(dim), 0.0));
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      tuple.push_back(uniform_in_cylinder(dim, r, t, engine));
      const double term = coef[n] * lgcp_xi(tuple, cov);
      total += term;
      const double delta = term - mean[n];
      mean[n] += delta / static_cast<double>(s + 1);
      m2[n] += delta * (term - mean[n]);
    }
    const double delta = total - total_mean;
    total_mean += delta / static_cast<double>(s + 1);
    total_m2 += delta * (total - total_mean);
  }
  const auto ns = static_cast<double>(mc_samples);
  for (std::size_t n = 0; n < N; ++n) {
    out.terms[n] = mean[n];
    out.term_errors[n] = std::sqrt(m2[n] / (ns - 1) / ns);
  }
  out.value = 1.0 + total_mean;
  out.std_error = std::sqrt(total_m2 / (ns - 1) / ns);
  for (std::size_t n = 1; n < N; ++n)
    if (std::abs(out.terms[n]) >= std::abs(out.terms[n - 1]) && out.terms[n] != 0.0)
      out.tail_decreasing = false;
  return out;
}

QuadratureResult K_from_pcf(const CovarianceModel& cov, double r, double t, int dim) {
  require_radius(r, t);
  if (dim < 1) throw std::invalid_argument("K_from_pcf: dimension must be >= 1");
  QuadratureResult out;
  if (r == 0.0 || t == 0.0) return out;
  const double omega = dim * unit_ball_volume(dim);
  // The integrand depends on |v| only: integrate over [0, t] and double.
  auto rule = [&](int n) {
    const auto q = gauss_legendre(n);
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      const double u = 0.5 * r * (q.nodes[a] + 1.0);
      double inner = 0.0;
      for (int b = 0; b < n; ++b) {
        const double v = 0.5 * t * (q.nodes[b] + 1.0);
        inner += q.weights[b] * std::exp(cov(u, v));
      }
      sum += q.weights[a] * inner * std::pow(u, dim - 1);
    }
    return omega * 2.0 * (0.25 * r * t) * sum;
  };
  const double coarse = rule(32);
  out.value = rule(64);
  out.error_estimate = std::abs(coarse - out.value);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_scale(double c_s, double c_t) {
  if (!(c_s > 0) || !(c_t > 0) || !std::isfinite(c_s) || !std::isfinite(c_t))
    throw std::invalid_argument("scale factors must be positive and finite");
}

SpacetimePoint scale_point(const SpacetimePoint& p, double c_s, double c_t) {
  return SpacetimePoint(p.space * c_s, p.time * c_t);
}

}  // namespace

Window scale_window(const Window& w, double c_s, double c_t) {
  require_scale(c_s, c_t);
  return Window(w.lo() * c_s, w.hi() * c_s, w.t_lo() * c_t, w.t_hi() * c_t);
}

PointPattern scale_pattern(const PointPattern& p, double c_s, double c_t) {
  require_scale(c_s, c_t);
  std::vector<SpacetimePoint> pts;
  pts.reserve(p.size());
  for (const auto& q : p.points()) pts.push_back(scale_point(q, c_s, c_t));
  return PointPattern(std::move(pts), scale_window(p.window(), c_s, c_t));
}

TestGrid scale_test_grid(const TestGrid& g, double c_s, double c_t) {
  require_scale(c_s, c_t);
  TestGrid out;
  out.probes.reserve(g.probes.size());
  for (const auto& q : g.probes) out.probes.push_back(scale_point(q, c_s, c_t));
  return out;
}

IntensityField scale_field(const IntensityField& f, double c_s, double c_t, int dim) {
  require_scale(c_s, c_t);
  if (dim < 1) throw std::invalid_argument("scale_field: dimension must be >= 1");
  const double jac = 1.0 / (std::pow(c_s, static_cast<double>(dim)) * c_t);
  switch (f.kind()) {
    case IntensityKind::constant:
      return IntensityField::constant(f.amplitude() * jac);
    case IntensityKind::log_linear:
      if (f.slope().size() != dim) throw DimensionMismatch("scale_field: slope dimension differs");
      return IntensityField::log_linear(f.amplitude() * jac, f.slope() / c_s, f.time_slope() / c_t);
    case IntensityKind::product_grid: {
      const auto& g = *f.grid();
      if (g.dim() != dim) throw DimensionMismatch("scale_field: grid dimension differs");
      CellGrid scaled(scale_window(g.window, c_s, c_t), g.spatial_counts, g.time_count);
      return IntensityField::product_grid(std::move(scaled), f.table() * jac, f.slack() * jac);
    }
    case IntensityKind::custom: {
      const auto& dom = *f.domain();
      if (dom.dim() != dim) throw DimensionMismatch("scale_field: domain dimension differs");
      auto inner = f;
      return IntensityField::custom(
          [inner, c_s, c_t, jac](const SpacetimePoint& q) {
            return jac * inner(SpacetimePoint(q.space / c_s, q.time / c_t));
          },
          scale_window(dom, c_s, c_t), *f.declared_lambda_bar() * jac,
          f.declared_upper_bound() * jac);
    }
  }
  throw std::invalid_argument("scale_field: unknown intensity kind");
}

// ---------------------------------------------------------------------------

Statistic parse_statistic(const std::string& name) {
  if (name == "F") return Statistic::F;
  if (name == "G") return Statistic::G;
  if (name == "J") return Statistic::J;
  if (name == "K") return Statistic::K;
  throw std::invalid_argument("unknown statistic '" + name + "' (expected F, G, J or K)");
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::F: return "F";
    case Statistic::G: return "G";
    case Statistic::J: return "J";
    case Statistic::K: return "K";
  }
  return "?";
}

const Eigen::ArrayXXd& statistic_values(const SummaryEstimate& e, Statistic s) {
  switch (s) {
    case Statistic::F: return e.F_hat;
    case Statistic::G: return e.G_hat;
    case Statistic::J: return e.J_hat;
    case Statistic::K: return e.K_hat;
  }
  return e.J_hat;
}

Envelope pointwise_envelope(std::span<const SummaryEstimate> sims, Statistic s, double alpha) {
  if (sims.empty()) throw std::invalid_argument("envelope: no simulations");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("envelope: alpha must lie in (0, 1)");
  const auto& grid = sims.front().grid;
  const Eigen::Index R = grid.rows(), T = grid.cols();
  for (const auto& e : sims)
    if (e.grid.r != grid.r || e.grid.t != grid.t)
      throw std::invalid_argument("envelope: replicates use different range grids");
  Envelope env{grid, Eigen::ArrayXXd::Constant(R, T, kNaN), Eigen::ArrayXXd::Constant(R, T, kNaN),
               Eigen::ArrayXXi::Zero(R, T), alpha, static_cast<int>(sims.size())};
  std::vector<double> vals;
  for (Eigen::Index j = 0; j < T; ++j) {
    for (Eigen::Index i = 0; i < R; ++i) {
      vals.clear();
      for (const auto& e : sims) {
        const double v = statistic_values(e, s)(i, j);
        if (!std::isnan(v)) vals.push_back(v);
      }
      env.n_defined(i, j) = static_cast<int>(vals.size());
      if (vals.empty() || 2 * (sims.size() - vals.size()) > sims.size()) continue;
      std::sort(vals.begin(), vals.end());
      const auto m = vals.size();
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(static_cast<double>(m) * alpha / 2.0)));
      const auto kk = std::min(k, m);
      env.lo(i, j) = vals[kk - 1];
      env.hi(i, j) = vals[m - kk];
    }
  }
  return env;
}

Envelope envelope(const std::function<SummaryEstimate(std::uint64_t)>& simulate_and_estimate,
                  Statistic s, int n_sim, std::uint64_t seed, double alpha, int jobs) {
  if (n_sim < 20) throw std::invalid_argument("envelope: n_sim must be >= 20");
  std::vector<std::optional<SummaryEstimate>> runs(static_cast<std::size_t>(n_sim));
  parallel_for(static_cast<std::size_t>(n_sim), jobs, [&](std::size_t i) {
    runs[i].emplace(simulate_and_estimate(derive_seed(seed, i)));
  });
  std::vector<SummaryEstimate> sims;
  sims.reserve(runs.size());
  for (auto& r : runs) sims.push_back(std::move(*r));
  return pointwise_envelope(sims, s, alpha);
}

double envelope_coverage(const Envelope& env, double value) {
  std::size_t defined = 0, covered = 0;
  for (Eigen::Index j = 0; j < env.lo.cols(); ++j)
    for (Eigen::Index i = 0; i < env.lo.rows(); ++i) {
      if (std::isnan(env.lo(i, j))) continue;
      ++defined;
      if (env.lo(i, j) <= value && value <= env.hi(i, j)) ++covered;
    }
  return defined == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(defined);
}

// ---------------------------------------------------------------------------

PapangelouDiagnostic hardcore_papangelou(std::span<const PointPattern> unthinned,
                                         const HardCoreSpec& spec, double p_bar,
                                         const TestGrid& probes, double r, double t) {
  spec.validate();
  require_radius(r, t);
  if (unthinned.empty()) throw std::invalid_argument("papangelou diagnostic: no realisations");
  if (!(p_bar > 0 && p_bar <= 1)) throw std::invalid_argument("p_bar must lie in (0, 1]");
  const double er = std::max(r, spec.spatial_radius), et = std::max(t, spec.temporal_radius);
  PapangelouDiagnostic out;
  double total_points = 0.0, total_volume = 0.0;
  double sum_lw = 0.0, sum_l = 0.0, sum_w = 0.0;
  for (const auto& y : unthinned) {
    const auto& w = y.window();
    if (!erosion_nonempty(w, er, et)) throw EmptyErosion("papangelou diagnostic: eroded window is empty");
    total_points += static_cast<double>(y.size());
    total_volume += w.volume();
    for (const auto& a : probes.probes) {
      if (!in_eroded(w, a, er, et)) continue;
      bool blocked = false;
      int inside = 0;
      for (const auto& q : y.points()) {
        if (within(a, q, spec.spatial_radius, spec.temporal_radius)) blocked = true;
        if (within(a, q, r, t)) ++inside;
      }
      const double lambda = blocked ? 0.0 : spec.beta;
      const double weight = std::pow(1.0 - p_bar, inside);
      sum_lw += lambda * weight;
      sum_l += lambda;
      sum_w += weight;
      ++out.n_locations;
    }
  }
  if (out.n_locations == 0) throw std::invalid_argument("papangelou diagnostic: no usable probes");
  const auto n = static_cast<double>(out.n_locations);
  out.lambda_hat = total_points / total_volume;
  out.beta_over_lambda = spec.beta / out.lambda_hat;
  out.covariance = sum_lw / n - (sum_l / n) * (sum_w / n);
  out.J = (sum_lw / n) / (out.lambda_hat * (sum_w / n));
  return out;
}

}  // namespace stpp

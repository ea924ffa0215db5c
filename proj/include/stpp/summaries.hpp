#pragma once

// Inhomogeneous space-time summary statistics.
//
// With lambda_bar = inf lambda and the reweighted factor
//   w(x,s) = 1 - lambda_bar / lambda(x,s)   in [0, 1),
// the minus-sampling estimators are
//   1 - G(r,t) ~ mean over points c in the eroded window of prod_{y != c, y in c + S_r^t} w(y)
//   1 - F(r,t) ~ mean over probes l in the eroded window of prod_{y in l + S_r^t} w(y)
//   J(r,t)     = (1 - G) / (1 - F)
// and K(r,t) sums 1 / (lambda(c) lambda(y)) over ordered pairs with c in the
// eroded window, divided by the eroded volume.

#include "stpp/covariance.hpp"
#include "stpp/geometry.hpp"
#include "stpp/intensity.hpp"
#include "stpp/simulators.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stpp {

/// Spatial and temporal ranges; both strictly increasing and nonnegative.
struct RangeGrid {
  std::vector<double> r;
  std::vector<double> t;

  RangeGrid(std::vector<double> r_values, std::vector<double> t_values);

  /// {step, 2 step, ..., count * step} on both axes.
  static RangeGrid regular(double r_step, int r_count, double t_step, int t_count);

  Eigen::Index rows() const { return static_cast<Eigen::Index>(r.size()); }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(t.size()); }
};

/// Probe locations L for the empty-space estimator.
struct TestGrid {
  std::vector<SpacetimePoint> probes;
};

/// Regular lattice of cell midpoints, counts per spatial axis then time.
TestGrid make_probe_grid(const Window& w, const std::vector<int>& counts);

/// Default 20 x ... x 20 lattice.
TestGrid make_probe_grid(const Window& w);

/// A single-cell estimate; `value` is empty when no center/probe was usable.
struct PointEstimate {
  std::optional<double> value;
  std::size_t count = 0;
};

PointEstimate estimate_G(const PointPattern& p, const IntensityField& f, double r, double t);
PointEstimate estimate_F(const PointPattern& p, const IntensityField& f, const TestGrid& grid,
                         double r, double t);
/// prod over points of p in center + S_r^t (skipping index `exclude`) of
/// 1 - lambda_bar / lambda.
double reweighted_product(const PointPattern& p, const IntensityField& f, double lambda_bar,
                          const SpacetimePoint& center, double r, double t,
                          std::optional<std::size_t> exclude = std::nullopt);

/// Throws EmptyErosion when the eroded window is empty.
double estimate_K(const PointPattern& p, const IntensityField& f, double r, double t);

/// Gridded estimates; NaN marks a missing cell.
struct SummaryEstimate {
  RangeGrid grid;
  Eigen::ArrayXXd F_hat, G_hat, J_hat, K_hat;
  Eigen::ArrayXXi n_centers, n_probes;
  double lambda_bar = 0.0;
  std::uint64_t seed = 0;
  std::string model;

  explicit SummaryEstimate(RangeGrid g);

  bool defined(Eigen::Index i, Eigen::Index j) const { return !std::isnan(J_hat(i, j)); }
};

/// F, G, J and K on every cell in one pass over centers and probes.
SummaryEstimate estimate_J(const PointPattern& p, const IntensityField& f, const TestGrid& grid,
                           const RangeGrid& rt_grid);

// ---------------------------------------------------------------------------
// Series representation and second-order quantities.

struct PoissonSeries {};
struct LgcpSeries {
  CovarianceModel cov;
};
using SeriesModel = std::variant<PoissonSeries, LgcpSeries>;

struct SeriesResult {
  double value = 1.0;
  double std_error = 0.0;
  /// (-lambda_bar)^n / n! * J_n for n = 1..N_max, with Monte Carlo errors.
  std::vector<double> terms;
  std::vector<double> term_errors;
  /// False when |term_n| stops decreasing, i.e. truncation is suspect.
  bool tail_decreasing = true;
};

/// 1 + sum_{n=1}^{N_max} (-lambda_bar)^n / n! J_n(r,t), each J_n by Monte
/// Carlo over uniform points in S_r^t. N_max in [0, 4].
SeriesResult series_J(const SeriesModel& model, double lambda_bar, double r, double t, int n_max,
                      std::int64_t mc_samples, std::uint64_t seed, int dim = 2);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // |32-node - 64-node|
};

/// omega_d int_{-t}^{t} int_0^r exp{C(u, v)} u^{d-1} du dv by tensor
/// Gauss-Legendre (32 x 32, checked against 64 x 64).
QuadratureResult K_from_pcf(const CovarianceModel& cov, double r, double t, int dim = 2);

// ---------------------------------------------------------------------------
// Scaling (x, t) -> (c_S x, c_T t).

Window scale_window(const Window& w, double c_s, double c_t);
PointPattern scale_pattern(const PointPattern& p, double c_s, double c_t);
TestGrid scale_test_grid(const TestGrid& g, double c_s, double c_t);
/// lambda_c(x,t) = c_S^{-d} c_T^{-1} lambda(x / c_S, t / c_T).
IntensityField scale_field(const IntensityField& f, double c_s, double c_t, int dim = 2);

// ---------------------------------------------------------------------------
// Monte Carlo envelopes.

enum class Statistic { F, G, J, K };

Statistic parse_statistic(const std::string& name);
std::string to_string(Statistic s);
const Eigen::ArrayXXd& statistic_values(const SummaryEstimate& e, Statistic s);

struct Envelope {
  RangeGrid grid;
  Eigen::ArrayXXd lo, hi;       // NaN where missing
  Eigen::ArrayXXi n_defined;
  double alpha = 0.05;
  int n_sim = 0;
};

/// Pointwise order-statistic band: with k = max(1, floor(n alpha / 2)),
/// lo = k-th smallest and hi = k-th largest defined value. A cell is missing
/// when more than half of the replicates are undefined there.
Envelope pointwise_envelope(std::span<const SummaryEstimate> sims, Statistic s, double alpha = 0.05);

/// Runs `simulate_and_estimate(seed_i)` for n_sim derived seeds and forms
/// the pointwise envelope. n_sim >= 20.
Envelope envelope(const std::function<SummaryEstimate(std::uint64_t)>& simulate_and_estimate,
                  Statistic s, int n_sim, std::uint64_t seed, double alpha = 0.05, int jobs = 1);

/// Fraction of defined envelope cells with lo <= value <= hi.
double envelope_coverage(const Envelope& env, double value);

// ---------------------------------------------------------------------------
// Conditional-intensity diagnostic for the thinned hard core.

struct PapangelouDiagnostic {
  double J = 0.0;                 // E[lambda(a;Y) W] / (lambda_hat E[W])
  double covariance = 0.0;        // Cov(lambda(a;Y), W), sign matches J - 1
  double lambda_hat = 0.0;        // pooled unthinned intensity
  double beta_over_lambda = 0.0;
  std::size_t n_locations = 0;
};

/// Averages over probe locations a in the window eroded by the larger of the
/// two cylinders, pooled across the unthinned realisations:
///   lambda(a;Y) = beta 1{Y(a + S_{R_S}^{R_T}) = 0},  W = (1 - p_bar)^{Y(a + S_r^t)}.
PapangelouDiagnostic hardcore_papangelou(std::span<const PointPattern> unthinned,
                                         const HardCoreSpec& spec, double p_bar,
                                         const TestGrid& probes, double r, double t);

}  // namespace stpp

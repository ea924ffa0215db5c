#pragma once

#include "stpp/covariance.hpp"
#include "stpp/geometry.hpp"
#include "stpp/intensity.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace stpp {

class BoundViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Gibbs hard core: Papangelou intensity beta * 1{no point within the
/// cylinder S_{R_S}^{R_T} around the proposed location}.
struct HardCoreSpec {
  double beta = 1300.0;
  double spatial_radius = 0.05;
  double temporal_radius = 0.05;
  std::int64_t mcmc_steps = 1'000'000;
  bool torus = true;

  void validate() const;
};

/// Retention probability p(x,t) in (0, 1] with certified infimum p_bar.
class RetentionFunction {
public:
  RetentionFunction(IntensityField p, const Window& w);

  double operator()(const SpacetimePoint& x) const { return field_(x); }
  double p_bar() const { return p_bar_; }
  const IntensityField& field() const { return field_; }

private:
  IntensityField field_;
  double p_bar_;
};

/// Thinning of a dominating homogeneous process at sup lambda on w.
PointPattern simulate_poisson(const IntensityField& f, const Window& w, std::uint64_t seed);

/// Homogeneous variant: thinning bound taken as `lambda_max` as given. A
/// field value above it aborts with BoundViolation.
PointPattern simulate_poisson(const IntensityField& f, const Window& w, double lambda_max,
                              std::uint64_t seed);

struct HardCoreChain {
  PointPattern pattern;
  std::vector<int> count_trace;  // point count every `trace_stride` steps
  std::int64_t trace_stride = 1;
  std::int64_t births_accepted = 0;
  std::int64_t deaths_accepted = 0;
};

/// Birth-death Metropolis-Hastings from the empty configuration.
HardCoreChain run_hardcore_chain(const HardCoreSpec& spec, const Window& w, std::uint64_t seed,
                                 std::int64_t trace_stride = 1000);

PointPattern simulate_hardcore(const HardCoreSpec& spec, const Window& w, std::uint64_t seed);

/// Number of pairs closer than (R_S, R_T) in both coordinates.
std::size_t count_hardcore_violations(const PointPattern& p, double spatial_radius,
                                      double temporal_radius, bool torus = false);

/// Burn-in diagnostic: compares the mean of the last quarter of the trace
/// with the quarter before it, using batch-means standard errors. True when
/// they agree within `n_se` standard errors.
bool count_trace_stationary(const std::vector<int>& trace, double n_se = 2.0);

/// Independent location-dependent retention.
PointPattern thin_pattern(const PointPattern& p, const RetentionFunction& retention,
                          std::uint64_t seed);

struct LgcpRealisation {
  PointPattern pattern;
  GridField field;
};

/// exp(mu) for a target intensity lambda: lambda * exp(-sigma^2 / 2).
IntensityField lgcp_mean_for_intensity(const IntensityField& intensity, const CovarianceModel& cov);

/// Cell-wise Poisson sampling of exp{mu(cell center) + Z(node)}.
class LgcpSampler {
public:
  LgcpSampler(IntensityField exp_mean, const CovarianceModel& cov, GridGeometry grid);

  LgcpRealisation sample(std::uint64_t seed) const;
  /// Same cell-wise sampling with a given field realisation.
  PointPattern sample_given_field(const GridField& z, std::uint64_t seed) const;

  const GridGeometry& grid() const { return sampler_.geometry(); }

private:
  IntensityField exp_mean_;
  SeparableFieldSampler sampler_;
  Eigen::MatrixXd log_mean_;  // mu at cell centers
};

LgcpRealisation simulate_lgcp(const IntensityField& exp_mean, const CovarianceModel& cov,
                              const GridGeometry& grid, const Window& w, std::uint64_t seed);

}  // namespace stpp

#pragma once

#include "stpp/geometry.hpp"
#include "stpp/intensity.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stpp {

class FactorizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// variance * exp(-|h|^exponent).
struct PowerExponential {
  double variance = 1.0;
  double exponent = 1.0;

  double operator()(double lag) const {
    return variance * std::exp(-std::pow(std::abs(lag), exponent));
  }
};

enum class CovarianceKind { power_exponential_sup, separable_mult, separable_add };

/// Stationary, isotropic-in-space covariance C(x, t). Only |x| and |t|
/// matter, so every evaluation goes through (spatial norm, time lag).
class CovarianceModel {
public:
  /// variance * exp(-max(|x|, |t|)^exponent).
  static CovarianceModel power_exponential_sup(double variance, double exponent);
  static CovarianceModel separable_mult(PowerExponential spatial, PowerExponential temporal);
  static CovarianceModel separable_add(PowerExponential spatial, PowerExponential temporal);

  CovarianceKind kind() const { return kind_; }
  const PowerExponential& spatial() const { return spatial_; }
  const PowerExponential& temporal() const { return temporal_; }

  double operator()(double spatial_lag, double temporal_lag) const;

  /// C(0, 0).
  double variance() const { return (*this)(0.0, 0.0); }

private:
  CovarianceModel(CovarianceKind k, PowerExponential s, PowerExponential t);

  CovarianceKind kind_;
  PowerExponential spatial_;   // the only component for power_exponential_sup
  PowerExponential temporal_;
};

double covariance(const CovarianceModel& cov, const SpacetimePoint& lag);

struct ContinuityReport {
  bool ok = true;
  std::vector<std::string> diagnostics;
};

/// Checks the polynomial sample-path continuity condition, which holds for
/// power-exponential components with exponent in (0, 2]. The exponent-zero
/// end of the family is rejected: its correlation does not decay.
ContinuityReport validate_continuity(const CovarianceModel& cov);

using GridGeometry = CellGrid;

/// Values at grid nodes (cell centers): rows are spatial nodes, columns are
/// time nodes.
struct GridField {
  GridGeometry geometry;
  Eigen::MatrixXd values;
};

/// Value of the node whose cell contains p; cell-boundary ties go to the
/// lower index.
double field_at(const GridField& f, const SpacetimePoint& p);

/// Node covariance matrices of a single component.
Eigen::MatrixXd spatial_covariance_matrix(const PowerExponential& c, const GridGeometry& g);
Eigen::MatrixXd temporal_covariance_matrix(const PowerExponential& c, const GridGeometry& g);

/// Lower Cholesky factor of a covariance matrix, adding 1e-10, 1e-9, 1e-8 to
/// the diagonal in turn until the factorization succeeds. A zero matrix
/// yields a zero factor.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov, double* used_jitter = nullptr);

/// Exact sampler for separable covariances on a fixed grid. Factorizations
/// are computed once; sample() is const and can be shared across threads.
class SeparableFieldSampler {
public:
  SeparableFieldSampler(const CovarianceModel& cov, GridGeometry geometry);

  const GridGeometry& geometry() const { return geometry_; }
  CovarianceKind kind() const { return kind_; }
  double max_jitter() const { return max_jitter_; }

  GridField sample(std::uint64_t seed) const;

private:
  CovarianceKind kind_;
  GridGeometry geometry_;
  Eigen::MatrixXd spatial_factor_;
  Eigen::MatrixXd temporal_factor_;
  double max_jitter_ = 0.0;
};

/// Z = L_S G L_T^T for a separable_mult model.
GridField simulate_grf(const CovarianceModel& cov, const GridGeometry& g, std::uint64_t seed);

/// Z(x,t) = Z_S(x) + Z_T(t) for a separable_add model.
GridField simulate_grf_additive(const CovarianceModel& cov, const GridGeometry& g,
                                std::uint64_t seed);

}  // namespace stpp

#include "stpp/covariance.hpp"

#include "stpp/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>

namespace stpp {

CovarianceModel::CovarianceModel(CovarianceKind k, PowerExponential s, PowerExponential t)
    : kind_(k), spatial_(s), temporal_(t) {
  for (const auto* c : {&spatial_, &temporal_}) {
    if (!(c->variance >= 0) || !std::isfinite(c->variance))
      throw std::invalid_argument("covariance variance must be finite and nonnegative");
    if (!std::isfinite(c->exponent) || c->exponent < 0)
      throw std::invalid_argument("covariance exponent must be finite and nonnegative");
  }
}

CovarianceModel CovarianceModel::power_exponential_sup(double variance, double exponent) {
  return CovarianceModel(CovarianceKind::power_exponential_sup, {variance, exponent}, {1.0, 1.0});
}

CovarianceModel CovarianceModel::separable_mult(PowerExponential spatial, PowerExponential temporal) {
  return CovarianceModel(CovarianceKind::separable_mult, spatial, temporal);
}

CovarianceModel CovarianceModel::separable_add(PowerExponential spatial, PowerExponential temporal) {
  return CovarianceModel(CovarianceKind::separable_add, spatial, temporal);
}

double CovarianceModel::operator()(double spatial_lag, double temporal_lag) const {
  switch (kind_) {
    case CovarianceKind::power_exponential_sup:
      return spatial_(std::max(std::abs(spatial_lag), std::abs(temporal_lag)));
    case CovarianceKind::separable_mult:
      return spatial_(spatial_lag) * temporal_(temporal_lag);
    case CovarianceKind::separable_add:
      return spatial_(spatial_lag) + temporal_(temporal_lag);
  }
  return 0.0;
}

double covariance(const CovarianceModel& cov, const SpacetimePoint& lag) {
  return cov(lag.space.norm(), lag.time);
}

ContinuityReport validate_continuity(const CovarianceModel& cov) {
  ContinuityReport report;
  auto check = [&](const PowerExponential& c, const char* name) {
    if (c.exponent == 0.0) {
      report.ok = false;
      report.diagnostics.push_back(std::string(name) +
                                   ": exponent 0 gives a non-decaying correlation (degenerate)");
    } else if (c.exponent > 2.0) {
      report.ok = false;
      report.diagnostics.push_back(std::string(name) + ": exponent " + std::to_string(c.exponent) +
                                   " outside (0, 2]; not a valid power-exponential correlation");
    }
    if (c.variance <= 0.0) report.diagnostics.push_back(std::string(name) + ": zero variance");
  };
  if (cov.kind() == CovarianceKind::power_exponential_sup) {
    check(cov.spatial(), "sup-norm");
  } else {
    check(cov.spatial(), "spatial");
    check(cov.temporal(), "temporal");
  }
  return report;
}

double field_at(const GridField& f, const SpacetimePoint& p) {
  const auto& g = f.geometry;
  if (!g.window.contains(p)) throw OutsideDomain("field_at: point outside the grid hull");
  const auto s = static_cast<Eigen::Index>(g.spatial_cell_of(p.space));
  const auto j = static_cast<Eigen::Index>(g.time_cell_of(p.time));
  return f.values(s, j);
}

Eigen::MatrixXd spatial_covariance_matrix(const PowerExponential& c, const GridGeometry& g) {
  const auto n = static_cast<Eigen::Index>(g.spatial_cells());
  std::vector<Eigen::VectorXd> nodes(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) nodes[i] = g.spatial_node(static_cast<std::size_t>(i));
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = c(0.0);
    for (Eigen::Index j = 0; j < i; ++j) m(i, j) = m(j, i) = c((nodes[i] - nodes[j]).norm());
  }
  return m;
}

Eigen::MatrixXd temporal_covariance_matrix(const PowerExponential& c, const GridGeometry& g) {
  const Eigen::Index n = g.time_count;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = c(g.time_node(static_cast<int>(i)) - g.time_node(static_cast<int>(j)));
  return m;
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& cov, double* used_jitter) {
  if (used_jitter) *used_jitter = 0.0;
  if (cov.isZero(0.0)) return Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
  const Eigen::Index n = cov.rows();
  for (double jitter : {1e-10, 1e-9, 1e-8}) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      if (used_jitter) *used_jitter = jitter;
      return llt.matrixL();
    }
  }
  throw FactorizationError("covariance matrix is not positive definite with jitter up to 1e-8");
}

SeparableFieldSampler::SeparableFieldSampler(const CovarianceModel& cov, GridGeometry geometry)
    : kind_(cov.kind()), geometry_(std::move(geometry)) {
  if (kind_ == CovarianceKind::power_exponential_sup)
    throw std::invalid_argument("separable sampler needs a separable_mult or separable_add model");
  double js = 0.0, jt = 0.0;
  spatial_factor_ = jittered_cholesky(spatial_covariance_matrix(cov.spatial(), geometry_), &js);
  temporal_factor_ = jittered_cholesky(temporal_covariance_matrix(cov.temporal(), geometry_), &jt);
  max_jitter_ = std::max(js, jt);
}

GridField SeparableFieldSampler::sample(std::uint64_t seed) const {
  auto engine = make_engine(seed);
  std::normal_distribution<double> normal;
  const auto ns = spatial_factor_.rows();
  const auto nt = temporal_factor_.rows();
  GridField out{geometry_, {}};
  if (kind_ == CovarianceKind::separable_mult) {
    Eigen::MatrixXd white(ns, nt);
    for (Eigen::Index j = 0; j < nt; ++j)
      for (Eigen::Index i = 0; i < ns; ++i) white(i, j) = normal(engine);
    out.values.noalias() = spatial_factor_ * white * temporal_factor_.transpose();
  } else {
    Eigen::VectorXd ws(ns), wt(nt);
    for (Eigen::Index i = 0; i < ns; ++i) ws[i] = normal(engine);
    for (Eigen::Index j = 0; j < nt; ++j) wt[j] = normal(engine);
    const Eigen::VectorXd zs = spatial_factor_ * ws;
    const Eigen::VectorXd zt = temporal_factor_ * wt;
    out.values = zs.replicate(1, nt) + zt.transpose().replicate(ns, 1);
  }
  return out;
}

GridField simulate_grf(const CovarianceModel& cov, const GridGeometry& g, std::uint64_t seed) {
  if (cov.kind() != CovarianceKind::separable_mult)
    throw std::invalid_argument("simulate_grf requires a separable_mult covariance");
  return SeparableFieldSampler(cov, g).sample(seed);
}

GridField simulate_grf_additive(const CovarianceModel& cov, const GridGeometry& g,
                                std::uint64_t seed) {
  if (cov.kind() != CovarianceKind::separable_add)
    throw std::invalid_argument("simulate_grf_additive requires a separable_add covariance");
  return SeparableFieldSampler(cov, g).sample(seed);
}

}  // namespace stpp

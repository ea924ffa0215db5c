#include "stpp/simulators.hpp"

#include "stpp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace stpp {

void HardCoreSpec::validate() const {
  if (!(beta > 0)) throw std::invalid_argument("hard core: beta must be positive");
  if (!(spatial_radius > 0) || !(temporal_radius > 0))
    throw std::invalid_argument("hard core: distances must be positive");
  if (mcmc_steps < 1) throw std::invalid_argument("hard core: mcmc_steps must be >= 1");
}

RetentionFunction::RetentionFunction(IntensityField p, const Window& w)
    : field_(std::move(p)), p_bar_(infimum(field_, w)) {
  if (supremum(field_, w) > 1.0) throw std::invalid_argument("retention probability exceeds 1");
}

PointPattern simulate_poisson(const IntensityField& f, const Window& w, std::uint64_t seed) {
  return simulate_poisson(f, w, supremum(f, w) * (1.0 + 1e-12), seed);
}

PointPattern simulate_poisson(const IntensityField& f, const Window& w, double lambda_max,
                              std::uint64_t seed) {
  if (!(lambda_max >= 0)) throw std::invalid_argument("lambda_max must be nonnegative");
  auto engine = make_engine(seed);
  std::poisson_distribution<long> count(lambda_max * w.volume());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long n = lambda_max > 0 ? count(engine) : 0;
  const auto d = w.dim();
  std::vector<SpacetimePoint> kept;
  kept.reserve(static_cast<std::size_t>(n));
  SpacetimePoint q(Eigen::VectorXd(d), 0.0);
  for (long i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) q.space[k] = w.lo()[k] + (w.hi()[k] - w.lo()[k]) * unit(engine);
    q.time = w.t_lo() + w.duration() * unit(engine);
    const double u = unit(engine);
    const double lambda = f(q);
    if (lambda > lambda_max)
      throw BoundViolation("intensity " + std::to_string(lambda) + " exceeds thinning bound " +
                           std::to_string(lambda_max));
    if (u * lambda_max < lambda) kept.push_back(q);
  }
  return PointPattern(std::move(kept), w);
}

namespace {

// Uniform cell list over the window for hard-core neighbour queries. Cells
// are at least as wide as the interaction range along every axis.
class CellList {
public:
  CellList(const Window& w, double rs, double rt, bool torus) : window_(w), torus_(torus) {
    const auto d = w.dim();
    constexpr int kMaxCellsPerAxis = 64;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double len = w.side_lengths()[k];
      counts_.push_back(std::clamp(static_cast<int>(std::floor(len / rs)), 1, kMaxCellsPerAxis));
      lengths_.push_back(len);
    }
    counts_.push_back(std::clamp(static_cast<int>(std::floor(w.duration() / rt)), 1, kMaxCellsPerAxis));
    lengths_.push_back(w.duration());
    std::size_t total = 1;
    for (int c : counts_) total *= static_cast<std::size_t>(c);
    cells_.resize(total);
  }

  std::size_t cell_of(const double* coords) const {
    std::size_t index = 0, stride = 1;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
      const double lo = k + 1 < counts_.size() ? window_.lo()[static_cast<Eigen::Index>(k)] : window_.t_lo();
      int i = static_cast<int>(std::floor((coords[k] - lo) / lengths_[k] * counts_[k]));
      i = std::clamp(i, 0, counts_[k] - 1);
      index += static_cast<std::size_t>(i) * stride;
      stride *= static_cast<std::size_t>(counts_[k]);
    }
    return index;
  }

  // Calls fn(point index) for every point in the cells adjacent to `cell`.
  template <typename Fn>
  void for_each_neighbour(std::size_t cell, Fn&& fn) const {
    const auto axes = counts_.size();
    std::vector<int> base(axes);
    std::size_t rem = cell;
    for (std::size_t k = 0; k < axes; ++k) {
      base[k] = static_cast<int>(rem % static_cast<std::size_t>(counts_[k]));
      rem /= static_cast<std::size_t>(counts_[k]);
    }
    // Distinct neighbouring indices per axis.
    std::vector<std::vector<int>> options(axes);
    for (std::size_t k = 0; k < axes; ++k) {
      for (int delta = -1; delta <= 1; ++delta) {
        int i = base[k] + delta;
        if (torus_) {
          i = (i % counts_[k] + counts_[k]) % counts_[k];
        } else if (i < 0 || i >= counts_[k]) {
          continue;
        }
        if (std::find(options[k].begin(), options[k].end(), i) == options[k].end())
          options[k].push_back(i);
      }
    }
    std::vector<std::size_t> pick(axes, 0);
    while (true) {
      std::size_t index = 0, stride = 1;
      for (std::size_t k = 0; k < axes; ++k) {
        index += static_cast<std::size_t>(options[k][pick[k]]) * stride;
        stride *= static_cast<std::size_t>(counts_[k]);
      }
      for (int p : cells_[index]) fn(p);
      std::size_t k = 0;
      for (; k < axes; ++k) {
        if (++pick[k] < options[k].size()) break;
        pick[k] = 0;
      }
      if (k == axes) break;
    }
  }

  std::vector<std::vector<int>>& cells() { return cells_; }

private:
  const Window& window_;
  bool torus_;
  std::vector<int> counts_;
  std::vector<double> lengths_;
  std::vector<std::vector<int>> cells_;
};

}  // namespace

HardCoreChain run_hardcore_chain(const HardCoreSpec& spec, const Window& w, std::uint64_t seed,
                                 std::int64_t trace_stride) {
  spec.validate();
  if (trace_stride < 1) throw std::invalid_argument("trace_stride must be >= 1");
  const auto d = static_cast<std::size_t>(w.dim());
  const std::size_t stride = d + 1;  // coordinates per point: space then time
  const double volume = w.volume();
  const double rs = spec.spatial_radius, rt = spec.temporal_radius;

  std::vector<double> lengths(stride);
  for (std::size_t k = 0; k < d; ++k) lengths[k] = w.side_lengths()[static_cast<Eigen::Index>(k)];
  lengths[d] = w.duration();

  CellList grid(w, rs, rt, spec.torus);
  auto& cells = grid.cells();
  std::vector<double> coords;       // flat, `stride` per point
  std::vector<std::size_t> cell_of; // per point
  std::vector<std::size_t> slot_of; // position within its cell list

  auto conflicts = [&](const double* x, std::size_t cell) {
    bool hit = false;
    grid.for_each_neighbour(cell, [&](int j) {
      if (hit) return;
      const double* y = &coords[static_cast<std::size_t>(j) * stride];
      double dt = std::abs(x[d] - y[d]);
      if (spec.torus) dt = std::min(dt, lengths[d] - dt);
      if (dt > rt) return;
      double s2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double dx = std::abs(x[k] - y[k]);
        if (spec.torus) dx = std::min(dx, lengths[k] - dx);
        s2 += dx * dx;
      }
      if (std::sqrt(s2) <= rs) hit = true;
    });
    return hit;
  };

  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HardCoreChain chain{PointPattern(w), {}, trace_stride, 0, 0};
  chain.count_trace.reserve(static_cast<std::size_t>(spec.mcmc_steps / trace_stride + 1));
  std::vector<double> proposal(stride);

  for (std::int64_t step = 0; step < spec.mcmc_steps; ++step) {
    const std::size_t n = cell_of.size();
    if (unit(engine) < 0.5) {
      for (std::size_t k = 0; k < d; ++k)
        proposal[k] = w.lo()[static_cast<Eigen::Index>(k)] + lengths[k] * unit(engine);
      proposal[d] = w.t_lo() + lengths[d] * unit(engine);
      const double accept = spec.beta * volume / static_cast<double>(n + 1);
      const double u = unit(engine);
      if (u < accept) {
        const std::size_t cell = grid.cell_of(proposal.data());
        if (!conflicts(proposal.data(), cell)) {
          coords.insert(coords.end(), proposal.begin(), proposal.end());
          cell_of.push_back(cell);
          slot_of.push_back(cells[cell].size());
          cells[cell].push_back(static_cast<int>(n));
          ++chain.births_accepted;
        }
      }
    } else if (n > 0) {
      const auto i = std::min(static_cast<std::size_t>(unit(engine) * static_cast<double>(n)), n - 1);
      const double accept = static_cast<double>(n) / (spec.beta * volume);
      if (unit(engine) < accept) {
        // Remove i from its cell, then move the last point into slot i.
        auto& ci = cells[cell_of[i]];
        const std::size_t si = slot_of[i];
        slot_of[static_cast<std::size_t>(ci.back())] = si;
        ci[si] = ci.back();
        ci.pop_back();
        const std::size_t last = n - 1;
        if (i != last) {
          std::copy_n(&coords[last * stride], stride, &coords[i * stride]);
          cell_of[i] = cell_of[last];
          slot_of[i] = slot_of[last];
          cells[cell_of[i]][slot_of[i]] = static_cast<int>(i);
        }
        coords.resize(last * stride);
        cell_of.pop_back();
        slot_of.pop_back();
        ++chain.deaths_accepted;
      }
    }
    if ((step + 1) % trace_stride == 0) chain.count_trace.push_back(static_cast<int>(cell_of.size()));
  }

  std::vector<SpacetimePoint> points;
  points.reserve(cell_of.size());
  for (std::size_t i = 0; i < cell_of.size(); ++i) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) x[static_cast<Eigen::Index>(k)] = coords[i * stride + k];
    points.emplace_back(std::move(x), coords[i * stride + d]);
  }
  chain.pattern = PointPattern(std::move(points), w);
  return chain;
}

PointPattern simulate_hardcore(const HardCoreSpec& spec, const Window& w, std::uint64_t seed) {
  return run_hardcore_chain(spec, w, seed).pattern;
}

std::size_t count_hardcore_violations(const PointPattern& p, double spatial_radius,
                                      double temporal_radius, bool torus) {
  const auto& w = p.window();
  std::size_t violations = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      double dt = std::abs(p[i].time - p[j].time);
      if (torus) dt = std::min(dt, w.duration() - dt);
      if (dt > temporal_radius) continue;
      double s2 = 0.0;
      for (Eigen::Index k = 0; k < w.dim(); ++k) {
        double dx = std::abs(p[i].space[k] - p[j].space[k]);
        if (torus) dx = std::min(dx, w.side_lengths()[k] - dx);
        s2 += dx * dx;
      }
      if (std::sqrt(s2) <= spatial_radius) ++violations;
    }
  }
  return violations;
}

bool count_trace_stationary(const std::vector<int>& trace, double n_se) {
  if (trace.size() < 8) return false;
  const std::size_t quarter = trace.size() / 4;
  auto stats = [&](std::size_t begin) {
    const std::size_t batches = std::min<std::size_t>(10, quarter);
    const std::size_t len = quarter / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < len; ++i) means[b] += trace[begin + b * len + i];
      means[b] /= static_cast<double>(len);
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches > 1 ? batches - 1 : 1);
    return std::pair{mean, var / static_cast<double>(batches)};
  };
  const std::size_t end = trace.size();
  const auto [m3, v3] = stats(end - 2 * quarter);
  const auto [m4, v4] = stats(end - quarter);
  const double se = std::sqrt(v3 + v4);
  return std::abs(m4 - m3) <= n_se * se || m4 == m3;
}

PointPattern thin_pattern(const PointPattern& p, const RetentionFunction& retention,
                          std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SpacetimePoint> kept;
  for (const auto& q : p.points()) {
    const double u = unit(engine);
    if (u < retention(q)) kept.push_back(q);
  }
  return PointPattern(std::move(kept), p.window());
}

IntensityField lgcp_mean_for_intensity(const IntensityField& intensity, const CovarianceModel& cov) {
  return intensity.scaled(std::exp(-cov.variance() / 2.0));
}

LgcpSampler::LgcpSampler(IntensityField exp_mean, const CovarianceModel& cov, GridGeometry grid)
    : exp_mean_(std::move(exp_mean)), sampler_(cov, std::move(grid)) {
  const auto report = validate_continuity(cov);
  if (!report.ok) {
    std::string msg = "LGCP covariance fails the continuity check:";
    for (const auto& m : report.diagnostics) msg += " " + m;
    throw std::invalid_argument(msg);
  }
  const auto& g = sampler_.geometry();
  const auto ns = static_cast<Eigen::Index>(g.spatial_cells());
  log_mean_.resize(ns, g.time_count);
  for (Eigen::Index s = 0; s < ns; ++s) {
    const Eigen::VectorXd x = g.spatial_node(static_cast<std::size_t>(s));
    for (int j = 0; j < g.time_count; ++j)
      log_mean_(s, j) = std::log(evaluate(exp_mean_, SpacetimePoint(x, g.time_node(j))));
  }
}

PointPattern LgcpSampler::sample_given_field(const GridField& z, std::uint64_t seed) const {
  const auto& g = sampler_.geometry();
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cell_volume = g.cell_volume();
  const auto d = g.dim();
  std::vector<SpacetimePoint> points;
  for (int j = 0; j < g.time_count; ++j) {
    const double t0 = g.window.t_lo() + j * g.time_spacing();
    for (Eigen::Index s = 0; s < log_mean_.rows(); ++s) {
      const double mean = std::exp(log_mean_(s, j) + z.values(s, j)) * cell_volume;
      std::poisson_distribution<int> count(mean);
      const int n = count(engine);
      if (n == 0) continue;
      std::vector<int> axis(static_cast<std::size_t>(d));
      for (std::size_t k = 0, rem = static_cast<std::size_t>(s); k < axis.size(); ++k) {
        axis[k] = static_cast<int>(rem % static_cast<std::size_t>(g.spatial_counts[k]));
        rem /= static_cast<std::size_t>(g.spatial_counts[k]);
      }
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(d);
        for (Eigen::Index k = 0; k < d; ++k)
          x[k] = std::min(g.window.lo()[k] + (axis[k] + unit(engine)) * g.spacing(k), g.window.hi()[k]);
        const double t = std::min(t0 + unit(engine) * g.time_spacing(), g.window.t_hi());
        points.emplace_back(std::move(x), t);
      }
    }
  }
  return PointPattern(std::move(points), g.window);
}

LgcpRealisation LgcpSampler::sample(std::uint64_t seed) const {
  GridField z = sampler_.sample(derive_seed(seed, 0));
  PointPattern p = sample_given_field(z, derive_seed(seed, 1));
  return {std::move(p), std::move(z)};
}

LgcpRealisation simulate_lgcp(const IntensityField& exp_mean, const CovarianceModel& cov,
                              const GridGeometry& grid, const Window& w, std::uint64_t seed) {
  if (!(grid.window == w)) throw std::invalid_argument("LGCP grid must cover exactly the window");
  return LgcpSampler(exp_mean, cov, grid).sample(seed);
}

}  // namespace stpp

#include "stpp/intensity.hpp"

#include "stpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stpp {

CellGrid::CellGrid(Window w, std::vector<int> counts, int nt)
    : window(std::move(w)), spatial_counts(std::move(counts)), time_count(nt) {
  if (static_cast<Eigen::Index>(spatial_counts.size()) != window.dim())
    throw DimensionMismatch("grid needs one cell count per spatial axis");
  for (int c : spatial_counts)
    if (c < 1) throw std::invalid_argument("grid cell counts must be >= 1");
  if (time_count < 1) throw std::invalid_argument("grid cell counts must be >= 1");
}

std::size_t CellGrid::spatial_cells() const {
  std::size_t n = 1;
  for (int c : spatial_counts) n *= static_cast<std::size_t>(c);
  return n;
}

double CellGrid::cell_volume() const {
  double v = time_spacing();
  for (Eigen::Index k = 0; k < dim(); ++k) v *= spacing(k);
  return v;
}

Eigen::VectorXd CellGrid::spatial_node(std::size_t index) const {
  Eigen::VectorXd x(dim());
  for (Eigen::Index k = 0; k < dim(); ++k) {
    const auto c = static_cast<std::size_t>(spatial_counts[k]);
    x[k] = window.lo()[k] + (static_cast<double>(index % c) + 0.5) * spacing(k);
    index /= c;
  }
  return x;
}

int CellGrid::axis_cell(double x, double lo, double h, int count) const {
  const int i = static_cast<int>(std::ceil((x - lo) / h)) - 1;
  return std::clamp(i, 0, count - 1);
}

std::size_t CellGrid::spatial_cell_of(const Eigen::VectorXd& x) const {
  std::size_t index = 0, stride = 1;
  for (Eigen::Index k = 0; k < dim(); ++k) {
    const int i = axis_cell(x[k], window.lo()[k], spacing(k), spatial_counts[k]);
    index += static_cast<std::size_t>(i) * stride;
    stride *= static_cast<std::size_t>(spatial_counts[k]);
  }
  return index;
}

IntensityField IntensityField::constant(double value) {
  if (!(value > 0) || !std::isfinite(value))
    throw InvalidIntensity("constant intensity must be positive and finite");
  IntensityField f;
  f.kind_ = IntensityKind::constant;
  f.amplitude_ = value;
  f.declared_lambda_bar_ = value;
  return f;
}

IntensityField IntensityField::log_linear(double amplitude, Eigen::VectorXd slope, double time_slope) {
  if (!(amplitude > 0) || !std::isfinite(amplitude))
    throw InvalidIntensity("log-linear amplitude must be positive and finite");
  if (!slope.allFinite() || !std::isfinite(time_slope))
    throw InvalidIntensity("log-linear slopes must be finite");
  IntensityField f;
  f.kind_ = IntensityKind::log_linear;
  f.amplitude_ = amplitude;
  f.slope_ = std::move(slope);
  f.time_slope_ = time_slope;
  return f;
}

IntensityField IntensityField::product_grid(CellGrid grid, Eigen::VectorXd values, double slack) {
  if (static_cast<std::size_t>(values.size()) != grid.cells())
    throw std::invalid_argument("table size does not match the grid");
  if (!values.allFinite()) throw InvalidIntensity("table values must be finite");
  if (!(slack >= 0)) throw std::invalid_argument("slack must be nonnegative");
  const double bar = values.minCoeff() - slack;
  if (!(bar > 0)) throw InvalidIntensity("tabulated intensity has nonpositive certified infimum");
  IntensityField f;
  f.kind_ = IntensityKind::product_grid;
  f.domain_ = grid.window;
  f.grid_ = std::move(grid);
  f.table_ = std::move(values);
  f.slack_ = slack;
  f.declared_lambda_bar_ = bar;
  return f;
}

IntensityField IntensityField::custom(Function fn, Window domain, double lower_bound,
                                      double upper_bound) {
  if (!fn) throw std::invalid_argument("custom intensity needs a callable");
  if (!(lower_bound > 0)) throw InvalidIntensity("custom intensity lower bound must be positive");
  if (!(upper_bound >= lower_bound)) throw InvalidIntensity("custom intensity bounds out of order");
  IntensityField f;
  f.kind_ = IntensityKind::custom;
  f.function_ = std::move(fn);
  f.domain_ = std::move(domain);
  f.declared_lambda_bar_ = lower_bound;
  f.upper_bound_ = upper_bound;
  return f;
}

double IntensityField::operator()(const SpacetimePoint& p) const {
  if (domain_ && !domain_->contains(p)) throw OutsideDomain("point outside the intensity domain");
  switch (kind_) {
    case IntensityKind::constant:
      return amplitude_;
    case IntensityKind::log_linear:
      if (p.dim() != slope_.size()) throw DimensionMismatch("point dimension differs from field");
      return amplitude_ * std::exp(slope_.dot(p.space) + time_slope_ * p.time);
    case IntensityKind::product_grid: {
      const auto s = grid_->spatial_cell_of(p.space);
      const auto j = static_cast<std::size_t>(grid_->time_cell_of(p.time));
      return table_[static_cast<Eigen::Index>(s + grid_->spatial_cells() * j)];
    }
    case IntensityKind::custom:
      return function_(p);
  }
  return 0.0;
}

IntensityField IntensityField::scaled(double factor) const {
  if (!(factor > 0) || !std::isfinite(factor))
    throw InvalidIntensity("scale factor must be positive and finite");
  IntensityField f = *this;
  switch (kind_) {
    case IntensityKind::constant:
    case IntensityKind::log_linear:
      f.amplitude_ *= factor;
      break;
    case IntensityKind::product_grid:
      f.table_ *= factor;
      f.slack_ *= factor;
      break;
    case IntensityKind::custom: {
      auto inner = function_;
      f.function_ = [inner, factor](const SpacetimePoint& p) { return factor * inner(p); };
      f.upper_bound_ *= factor;
      break;
    }
  }
  if (f.declared_lambda_bar_) *f.declared_lambda_bar_ *= factor;
  return f;
}

double evaluate(const IntensityField& f, const SpacetimePoint& p) {
  const double v = f(p);
  if (!(v > 0)) throw InvalidIntensity("intensity evaluated to a nonpositive value");
  return v;
}

namespace {

void require_domain(const IntensityField& f, const Window& w) {
  if (f.domain() && !f.domain()->contains(w))
    throw OutsideDomain("window extends beyond the intensity domain");
}

// Range of cell indices along one axis overlapping [a, b].
std::pair<int, int> cell_range(double a, double b, double lo, double h, int count) {
  int first = static_cast<int>(std::floor((a - lo) / h));
  int last = static_cast<int>(std::ceil((b - lo) / h)) - 1;
  first = std::clamp(first, 0, count - 1);
  last = std::clamp(last, first, count - 1);
  return {first, last};
}

// Calls fn(linear cell index, overlap volume) for each grid cell meeting w.
template <typename Fn>
void for_each_overlapping_cell(const CellGrid& g, const Window& w, Fn&& fn) {
  const auto d = g.dim();
  std::vector<std::pair<int, int>> ranges(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k)
    ranges[k] = cell_range(w.lo()[k], w.hi()[k], g.window.lo()[k], g.spacing(k), g.spatial_counts[k]);
  const auto trange = cell_range(w.t_lo(), w.t_hi(), g.window.t_lo(), g.time_spacing(), g.time_count);
  auto overlap = [](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) idx[k] = ranges[k].first;
  while (true) {
    double vol = 1.0;
    std::size_t s = 0, stride = 1;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double c0 = g.window.lo()[k] + idx[k] * g.spacing(k);
      vol *= overlap(c0, c0 + g.spacing(k), w.lo()[k], w.hi()[k]);
      s += static_cast<std::size_t>(idx[k]) * stride;
      stride *= static_cast<std::size_t>(g.spatial_counts[k]);
    }
    for (int j = trange.first; j <= trange.second; ++j) {
      const double c0 = g.window.t_lo() + j * g.time_spacing();
      const double v = vol * overlap(c0, c0 + g.time_spacing(), w.t_lo(), w.t_hi());
      fn(s + g.spatial_cells() * static_cast<std::size_t>(j), v);
    }
    Eigen::Index k = 0;
    for (; k < d; ++k) {
      if (++idx[k] <= ranges[k].second) break;
      idx[k] = ranges[k].first;
    }
    if (k == d) break;
  }
}

// log of the extreme of b.x + c.t over the box: picks the corner per axis.
double log_linear_extreme(const IntensityField& f, const Window& w, bool upper) {
  if (f.slope().size() != w.dim()) throw DimensionMismatch("window dimension differs from field");
  double e = 0.0;
  for (Eigen::Index k = 0; k < w.dim(); ++k) {
    const double b = f.slope()[k];
    e += (b >= 0) == upper ? b * w.hi()[k] : b * w.lo()[k];
  }
  const double c = f.time_slope();
  e += (c >= 0) == upper ? c * w.t_hi() : c * w.t_lo();
  return e;
}

double exp_integral(double slope, double lo, double hi) {
  if (slope == 0.0) return hi - lo;
  return std::exp(slope * lo) * std::expm1(slope * (hi - lo)) / slope;
}

double gauss_legendre_box(const IntensityField& f, const Window& w, int n) {
  const auto rule = gauss_legendre(n);
  const auto d = w.dim();
  const auto dims = static_cast<std::size_t>(d + 1);
  std::vector<int> idx(dims, 0);
  Eigen::VectorXd half = (w.hi() - w.lo()) / 2, mid = (w.hi() + w.lo()) / 2;
  const double thalf = w.duration() / 2, tmid = (w.t_hi() + w.t_lo()) / 2;
  double sum = 0.0;
  SpacetimePoint p(Eigen::VectorXd(d), 0.0);
  while (true) {
    double weight = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      p.space[k] = mid[k] + half[k] * rule.nodes[idx[k]];
      weight *= rule.weights[idx[k]];
    }
    p.time = tmid + thalf * rule.nodes[idx[d]];
    weight *= rule.weights[idx[d]];
    sum += weight * f(p);
    std::size_t k = 0;
    for (; k < dims; ++k) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
    if (k == dims) break;
  }
  return sum * half.prod() * thalf;
}

}  // namespace

double infimum(const IntensityField& f, const Window& w) {
  require_domain(f, w);
  double v = 0.0;
  switch (f.kind()) {
    case IntensityKind::constant:
      v = f.amplitude();
      break;
    case IntensityKind::log_linear:
      v = f.amplitude() * std::exp(log_linear_extreme(f, w, false));
      break;
    case IntensityKind::product_grid: {
      double m = std::numeric_limits<double>::infinity();
      for_each_overlapping_cell(*f.grid(), w, [&](std::size_t i, double vol) {
        if (vol > 0) m = std::min(m, f.table()[static_cast<Eigen::Index>(i)]);
      });
      v = m - f.slack();
      break;
    }
    case IntensityKind::custom:
      v = *f.declared_lambda_bar();
      break;
  }
  if (!(v > 0)) throw InvalidIntensity("intensity infimum is not positive");
  return v;
}

double supremum(const IntensityField& f, const Window& w) {
  require_domain(f, w);
  switch (f.kind()) {
    case IntensityKind::constant:
      return f.amplitude();
    case IntensityKind::log_linear:
      return f.amplitude() * std::exp(log_linear_extreme(f, w, true));
    case IntensityKind::product_grid: {
      double m = 0.0;
      for_each_overlapping_cell(*f.grid(), w, [&](std::size_t i, double vol) {
        if (vol > 0) m = std::max(m, f.table()[static_cast<Eigen::Index>(i)]);
      });
      return m;
    }
    case IntensityKind::custom:
      return f.declared_upper_bound();
  }
  return 0.0;
}

double integrate(const IntensityField& f, const Window& w) {
  require_domain(f, w);
  switch (f.kind()) {
    case IntensityKind::constant:
      return f.amplitude() * w.volume();
    case IntensityKind::log_linear: {
      if (f.slope().size() != w.dim()) throw DimensionMismatch("window dimension differs from field");
      double v = f.amplitude() * exp_integral(f.time_slope(), w.t_lo(), w.t_hi());
      for (Eigen::Index k = 0; k < w.dim(); ++k) v *= exp_integral(f.slope()[k], w.lo()[k], w.hi()[k]);
      return v;
    }
    case IntensityKind::product_grid: {
      double v = 0.0;
      for_each_overlapping_cell(*f.grid(), w, [&](std::size_t i, double vol) {
        v += f.table()[static_cast<Eigen::Index>(i)] * vol;
      });
      return v;
    }
    case IntensityKind::custom: {
      double prev = gauss_legendre_box(f, w, 4);
      for (int n = 8; n <= 128; n *= 2) {
        const double cur = gauss_legendre_box(f, w, n);
        if (std::abs(cur - prev) <= 1e-8 * std::abs(cur)) return cur;
        prev = cur;
      }
      return prev;
    }
  }
  return 0.0;
}

IntensityField kernel_estimate(const PointPattern& p, KernelBandwidth bw, double floor,
                               std::vector<int> spatial_counts, int time_count) {
  if (p.empty()) throw std::invalid_argument("kernel_estimate: empty pattern");
  if (!(bw.spatial > 0) || !(bw.temporal > 0))
    throw std::invalid_argument("kernel_estimate: bandwidths must be positive");
  if (!(floor > 0)) throw std::invalid_argument("kernel_estimate: floor must be positive");
  const Window& w = p.window();
  const auto d = w.dim();
  if (spatial_counts.empty()) spatial_counts.assign(static_cast<std::size_t>(d), 32);
  CellGrid grid(w, std::move(spatial_counts), time_count);

  auto overlap = [](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  // Per-axis overlap of a clipped box [c - h, c + h] with every cell, divided
  // by the clipped length, so each axis profile sums to one.
  auto profile = [&](double c, double h, double lo, double hi, int count) {
    const double a0 = std::max(c - h, lo), a1 = std::min(c + h, hi);
    const double cell = (hi - lo) / count;
    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    for (int i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = overlap(a0, a1, lo + i * cell, lo + (i + 1) * cell) / (a1 - a0);
    return out;
  };

  Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.cells()));
  const double cell_volume = grid.cell_volume();
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (const auto& q : p.points()) {
    for (Eigen::Index k = 0; k < d; ++k)
      axes[static_cast<std::size_t>(k)] =
          profile(q.space[k], bw.spatial, w.lo()[k], w.hi()[k], grid.spatial_counts[static_cast<std::size_t>(k)]);
    const auto tp = profile(q.time, bw.temporal, w.t_lo(), w.t_hi(), grid.time_count);
    for (std::size_t s = 0; s < grid.spatial_cells(); ++s) {
      double ws = 1.0;
      for (std::size_t k = 0, rem = s; k < axes.size() && ws > 0; ++k) {
        const auto n = static_cast<std::size_t>(grid.spatial_counts[k]);
        ws *= axes[k][rem % n];
        rem /= n;
      }
      if (ws == 0.0) continue;
      for (int j = 0; j < grid.time_count; ++j) {
        const double wt = tp[static_cast<std::size_t>(j)];
        if (wt > 0)
          values[static_cast<Eigen::Index>(s + grid.spatial_cells() * static_cast<std::size_t>(j))] +=
              ws * wt / cell_volume;
      }
    }
  }
  values = values.cwiseMax(floor);
  const double slack = values.minCoeff() - floor;
  return IntensityField::product_grid(std::move(grid), std::move(values), slack);
}

}  // namespace stpp

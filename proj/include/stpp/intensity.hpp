#pragma once

#include "stpp/geometry.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace stpp {

class InvalidIntensity : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class OutsideDomain : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

enum class IntensityKind { constant, log_linear, product_grid, custom };

/// Regular cell grid over a window: spatial_counts[k] cells along axis k and
/// time_count cells along time. Nodes are cell centers.
struct CellGrid {
  Window window;
  std::vector<int> spatial_counts;
  int time_count = 1;

  CellGrid(Window w, std::vector<int> counts, int nt);

  Eigen::Index dim() const { return window.dim(); }
  std::size_t spatial_cells() const;
  std::size_t cells() const { return spatial_cells() * static_cast<std::size_t>(time_count); }
  double spacing(Eigen::Index axis) const { return window.side_lengths()[axis] / spatial_counts[axis]; }
  double time_spacing() const { return window.duration() / time_count; }
  double cell_volume() const;

  /// Spatial cell center; axis 0 varies fastest in the linear index.
  Eigen::VectorXd spatial_node(std::size_t index) const;
  double time_node(int j) const { return window.t_lo() + (j + 0.5) * time_spacing(); }

  /// Index of the containing cell along one axis. A point on the boundary
  /// between two cells belongs to the lower one.
  int axis_cell(double x, double lo, double h, int count) const;
  std::size_t spatial_cell_of(const Eigen::VectorXd& x) const;
  int time_cell_of(double t) const { return axis_cell(t, window.t_lo(), time_spacing(), time_count); }
};

/// Evaluable intensity lambda(x,t) with a certified positive lower bound.
class IntensityField {
public:
  using Function = std::function<double(const SpacetimePoint&)>;

  static IntensityField constant(double value);
  /// A * exp(b . x + c * t).
  static IntensityField log_linear(double amplitude, Eigen::VectorXd slope, double time_slope);
  /// Piecewise-constant table over grid cells (values indexed spatial-major,
  /// i.e. value(cell) = values[spatial + n_spatial * time]). `slack` is
  /// subtracted from the grid minimum when certifying the infimum.
  static IntensityField product_grid(CellGrid grid, Eigen::VectorXd values, double slack = 0.0);
  /// User callable on `domain` with declared bounds lower <= f <= upper.
  static IntensityField custom(Function f, Window domain, double lower_bound, double upper_bound);

  IntensityKind kind() const { return kind_; }
  double operator()(const SpacetimePoint& p) const;

  /// Stated lower bound over the field's own domain (constant / log-linear
  /// fields have no domain restriction; the bound is then computed per window).
  std::optional<double> declared_lambda_bar() const { return declared_lambda_bar_; }
  const std::optional<Window>& domain() const { return domain_; }

  double amplitude() const { return amplitude_; }
  const Eigen::VectorXd& slope() const { return slope_; }
  double time_slope() const { return time_slope_; }
  const std::optional<CellGrid>& grid() const { return grid_; }
  const Eigen::VectorXd& table() const { return table_; }
  double slack() const { return slack_; }
  double declared_upper_bound() const { return upper_bound_; }

  /// Field multiplied by a positive constant.
  IntensityField scaled(double factor) const;

private:
  IntensityField() = default;

  IntensityKind kind_ = IntensityKind::constant;
  double amplitude_ = 1.0;
  Eigen::VectorXd slope_;
  double time_slope_ = 0.0;
  std::optional<CellGrid> grid_;
  Eigen::VectorXd table_;
  double slack_ = 0.0;
  Function function_;
  double upper_bound_ = 0.0;
  std::optional<double> declared_lambda_bar_;
  std::optional<Window> domain_;
};

double evaluate(const IntensityField& f, const SpacetimePoint& p);

/// inf over w of lambda. Exact for constant / log-linear fields (the
/// extremum sits at a box corner), grid minimum minus slack for tables,
/// declared bound for custom fields. Throws InvalidIntensity if <= 0.
double infimum(const IntensityField& f, const Window& w);

/// sup over w of lambda, same certification rules as infimum.
double supremum(const IntensityField& f, const Window& w);

/// Lambda(w). Closed form for constant / log-linear / tables; tensor
/// Gauss-Legendre refined to relative tolerance 1e-8 for custom fields.
double integrate(const IntensityField& f, const Window& w);

struct KernelBandwidth {
  double spatial = 0.1;
  double temporal = 0.1;
};

/// Separable box-kernel estimate on a cell grid over the pattern window.
/// Each point's kernel is renormalised by its mass inside the window, then
/// the table is clamped below at `floor`, which becomes the declared bound.
IntensityField kernel_estimate(const PointPattern& p, KernelBandwidth bw, double floor,
                               std::vector<int> spatial_counts = {}, int time_count = 32);

}  // namespace stpp

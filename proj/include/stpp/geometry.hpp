#pragma once

// Space-time domain primitives: points in R^d x R, box windows, cylinder
// sets and point patterns. Everything here is templated on the scalar type;
// the rest of the library works with the double aliases at the bottom.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stpp {

class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class EmptyErosion : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class InvalidPattern : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct BasicSpacetimePoint {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector space;
  Scalar time{0};

  BasicSpacetimePoint() = default;
  BasicSpacetimePoint(Vector x, Scalar t) : space(std::move(x)), time(t) {}

  Eigen::Index dim() const { return space.size(); }

  bool finite() const { return space.allFinite() && std::isfinite(time); }

  friend bool operator==(const BasicSpacetimePoint& a, const BasicSpacetimePoint& b) {
    return a.time == b.time && a.space.size() == b.space.size() && a.space == b.space;
  }
};

namespace detail {

template <typename Scalar>
void require_same_dim(const BasicSpacetimePoint<Scalar>& a, const BasicSpacetimePoint<Scalar>& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("spatial dimensions differ: " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
}

}  // namespace detail

/// Euclidean distance between the spatial components.
template <typename Scalar>
Scalar spatial_distance(const BasicSpacetimePoint<Scalar>& a, const BasicSpacetimePoint<Scalar>& b) {
  detail::require_same_dim(a, b);
  return (a.space - b.space).norm();
}

/// d((x,t),(y,s)) = max{ |x - y|, |t - s| }.
template <typename Scalar>
Scalar sup_distance(const BasicSpacetimePoint<Scalar>& a, const BasicSpacetimePoint<Scalar>& b) {
  return std::max(spatial_distance(a, b), std::abs(a.time - b.time));
}

/// Closed cylinder (center + S_r^t).
template <typename Scalar>
struct BasicCylinder {
  BasicSpacetimePoint<Scalar> center;
  Scalar spatial_radius{0};
  Scalar temporal_radius{0};

  BasicCylinder(BasicSpacetimePoint<Scalar> c, Scalar r, Scalar t)
      : center(std::move(c)), spatial_radius(r), temporal_radius(t) {
    if (!(r >= 0) || !(t >= 0)) throw std::invalid_argument("cylinder radii must be nonnegative");
  }
};

template <typename Scalar>
bool cylinder_contains(const BasicCylinder<Scalar>& c, const BasicSpacetimePoint<Scalar>& p) {
  return spatial_distance(p, c.center) <= c.spatial_radius &&
         std::abs(p.time - c.center.time) <= c.temporal_radius;
}

/// kappa_d = pi^{d/2} / Gamma(1 + d/2).
template <typename Scalar = double>
Scalar unit_ball_volume(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const Scalar half = Scalar(d) / Scalar(2);
  return std::pow(std::numbers::pi_v<Scalar>, half) / std::tgamma(Scalar(1) + half);
}

/// Lebesgue measure of S_r^t in R^d x R.
template <typename Scalar = double>
Scalar cylinder_volume(int d, Scalar r, Scalar t) {
  if (!(r >= 0) || !(t >= 0)) throw std::invalid_argument("cylinder radii must be nonnegative");
  return unit_ball_volume<Scalar>(d) * std::pow(r, d) * Scalar(2) * t;
}

/// Axis-aligned box W_S times an interval W_T.
template <typename Scalar>
class BasicWindow {
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicWindow(Vector lo, Vector hi, Scalar t_lo, Scalar t_hi)
      : lo_(std::move(lo)), hi_(std::move(hi)), t_lo_(t_lo), t_hi_(t_hi) {
    if (lo_.size() != hi_.size() || lo_.size() < 1)
      throw DimensionMismatch("window bounds must have equal, positive dimension");
    if (!lo_.allFinite() || !hi_.allFinite() || !std::isfinite(t_lo_) || !std::isfinite(t_hi_))
      throw std::invalid_argument("window bounds must be finite");
    if ((hi_.array() <= lo_.array()).any() || !(t_hi_ > t_lo_))
      throw std::invalid_argument("window requires lo < hi in every coordinate");
  }

  /// [0,1]^d x [0,1].
  static BasicWindow unit(int d) {
    return BasicWindow(Vector::Zero(d), Vector::Ones(d), Scalar(0), Scalar(1));
  }

  Eigen::Index dim() const { return lo_.size(); }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  Scalar t_lo() const { return t_lo_; }
  Scalar t_hi() const { return t_hi_; }
  Vector side_lengths() const { return hi_ - lo_; }
  Scalar duration() const { return t_hi_ - t_lo_; }

  Scalar spatial_measure() const { return (hi_ - lo_).prod(); }
  Scalar temporal_measure() const { return t_hi_ - t_lo_; }
  Scalar volume() const { return spatial_measure() * temporal_measure(); }

  bool contains(const BasicSpacetimePoint<Scalar>& p) const {
    if (p.dim() != dim()) throw DimensionMismatch("point and window dimensions differ");
    return (p.space.array() >= lo_.array()).all() && (p.space.array() <= hi_.array()).all() &&
           p.time >= t_lo_ && p.time <= t_hi_;
  }

  bool contains(const BasicWindow& w) const {
    return w.dim() == dim() && (w.lo_.array() >= lo_.array()).all() &&
           (w.hi_.array() <= hi_.array()).all() && w.t_lo_ >= t_lo_ && w.t_hi_ <= t_hi_;
  }

  friend bool operator==(const BasicWindow& a, const BasicWindow& b) {
    return a.dim() == b.dim() && a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.t_lo_ == b.t_lo_ &&
           a.t_hi_ == b.t_hi_;
  }

private:
  Vector lo_, hi_;
  Scalar t_lo_, t_hi_;
};

/// True when W_S^{-r} x W_T^{-t} has positive measure.
template <typename Scalar>
bool erosion_nonempty(const BasicWindow<Scalar>& w, Scalar r, Scalar t) {
  return (2 * r < w.side_lengths().array()).all() && 2 * t < w.duration();
}

/// Minus-sampling window W_S^{-r} x W_T^{-t}; throws EmptyErosion when degenerate.
template <typename Scalar>
BasicWindow<Scalar> erode_window(const BasicWindow<Scalar>& w, Scalar r, Scalar t) {
  if (!(r >= 0) || !(t >= 0)) throw std::invalid_argument("erosion radii must be nonnegative");
  if (!erosion_nonempty(w, r, t))
    throw EmptyErosion("erosion by (" + std::to_string(r) + ", " + std::to_string(t) +
                       ") leaves an empty window");
  return BasicWindow<Scalar>(w.lo().array() + r, w.hi().array() - r, w.t_lo() + t, w.t_hi() - t);
}

/// Membership in the eroded window without constructing it. Uses the same
/// bound arithmetic as erode_window so both routes agree bit for bit.
template <typename Scalar>
bool in_eroded(const BasicWindow<Scalar>& w, const BasicSpacetimePoint<Scalar>& p, Scalar r,
               Scalar t) {
  for (Eigen::Index k = 0; k < w.dim(); ++k) {
    if (!(p.space[k] >= w.lo()[k] + r && p.space[k] <= w.hi()[k] - r)) return false;
  }
  return p.time >= w.t_lo() + t && p.time <= w.t_hi() - t;
}

template <typename Scalar>
class BasicPointPattern {
public:
  using Point = BasicSpacetimePoint<Scalar>;
  using Window = BasicWindow<Scalar>;

  explicit BasicPointPattern(Window w) : window_(std::move(w)) {}

  BasicPointPattern(std::vector<Point> points, Window w)
      : points_(std::move(points)), window_(std::move(w)) {
    validate();
  }

  const std::vector<Point>& points() const { return points_; }
  const Window& window() const { return window_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  Eigen::Index dim() const { return window_.dim(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

private:
  void validate() const {
    for (const auto& p : points_) {
      if (p.dim() != window_.dim()) throw DimensionMismatch("point dimension differs from window");
      if (!p.finite()) throw InvalidPattern("non-finite coordinate");
      if (!window_.contains(p)) throw InvalidPattern("point outside the observation window");
    }
    std::vector<const Point*> order;
    order.reserve(points_.size());
    for (const auto& p : points_) order.push_back(&p);
    auto less = [](const Point* a, const Point* b) {
      if (a->time != b->time) return a->time < b->time;
      return std::lexicographical_compare(a->space.data(), a->space.data() + a->space.size(),
                                          b->space.data(), b->space.data() + b->space.size());
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (*order[i] == *order[i - 1]) throw InvalidPattern("duplicate point (pattern not simple)");
    }
  }

  std::vector<Point> points_;
  Window window_;
};

/// Points of p inside w, order preserved, carrying w as the new window.
template <typename Scalar>
BasicPointPattern<Scalar> restrict_pattern(const BasicPointPattern<Scalar>& p,
                                           const BasicWindow<Scalar>& w) {
  if (!p.window().contains(w))
    throw std::invalid_argument("restriction window is not contained in the pattern window");
  std::vector<BasicSpacetimePoint<Scalar>> kept;
  for (const auto& q : p.points())
    if (w.contains(q)) kept.push_back(q);
  return BasicPointPattern<Scalar>(std::move(kept), w);
}

using SpacetimePoint = BasicSpacetimePoint<double>;
using Cylinder = BasicCylinder<double>;
using Window = BasicWindow<double>;
using PointPattern = BasicPointPattern<double>;

/// Convenience for d = 2.
inline SpacetimePoint make_point(double x, double y, double t) {
  return SpacetimePoint(Eigen::Vector2d(x, y), t);
}

}  // namespace stpp

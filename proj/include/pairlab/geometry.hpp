#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pairlab/quadrature.hpp"

namespace pairlab {

using Vec2 = Eigen::Vector2d;

/// Interval of the real line; each end may be open or closed. The default is
/// closed-left/open-right, matching superlevel sets {u > t}.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_lo = true;
  bool closed_hi = false;

  double length() const { return hi > lo ? hi - lo : 0.0; }
  bool contains(double x) const {
    const bool left = closed_lo ? x >= lo : x > lo;
    const bool right = closed_hi ? x <= hi : x < hi;
    return left && right;
  }
  bool contains_open(double x) const { return x > lo && x < hi; }
};

/// Intersection of two intervals; returns nullopt when empty (a single
/// point is kept if both ends are closed there).
std::optional<Interval> intersect(const Interval& a, const Interval& b);

struct Box {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  bool contains_open(const Vec2& p) const {
    return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y();
  }
  double area() const { return std::max(0.0, hi.x() - lo.x()) * std::max(0.0, hi.y() - lo.y()); }
  double distance_to_boundary(const Vec2& p) const {
    return std::min({p.x() - lo.x(), hi.x() - p.x(), p.y() - lo.y(), hi.y() - p.y()});
  }
};

std::optional<Box> intersect(const Box& a, const Box& b);

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

struct CircleArc {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  double theta0 = 0.0;
  double theta1 = 0.0;  // theta1 > theta0; full circle is [0, 2*pi]

  Vec2 at(double theta) const { return center + radius * Vec2(std::cos(theta), std::sin(theta)); }
};

struct Polyline {
  std::vector<Vec2> points;
  bool closed = false;
};

using Curve = std::variant<CircleArc, Polyline>;

double length(const Curve& c);

/// Parameter sub-intervals of a segment (s in [0,1]) inside a closed box.
std::optional<std::pair<double, double>> clip_segment(const Vec2& p0, const Vec2& p1, const Box& box);

/// Angle sub-intervals of an arc inside a closed box.
std::vector<std::pair<double, double>> clip_arc(const CircleArc& arc, const Box& box);

/// Length of the part of a curve inside a closed box.
double clipped_length(const Curve& c, const Box& box);

/// Arclength integral of h along a curve, optionally clipped to a box.
QuadResult integrate_curve(const Curve& c, const std::function<double(const Vec2&)>& h,
                           const std::optional<Box>& clip = std::nullopt, const QuadOptions& opt = {});

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

struct Disc {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

/// Simple polygon; vertices are stored counter-clockwise.
struct Polygon {
  std::vector<Vec2> vertices;
};

Polygon make_polygon(std::vector<Vec2> vertices);

using Shape = std::variant<Disc, Polygon>;

bool contains(const Shape& s, const Vec2& p);
double area(const Shape& s);
double perimeter(const Shape& s);
Box bounding_box(const Shape& s);
Curve boundary(const Shape& s);
/// Measure-theoretic interior unit normal at a boundary point (nearest edge
/// for polygons).
Vec2 interior_normal(const Shape& s, const Vec2& p);

using AreaIntegrand = std::function<double(const Vec2&)>;

/// Area integral over a shape. When `singular` lies in (or on the closure
/// of) the shape the integral is anchored there: polar coordinates for
/// discs, a triangle fan with collapsed-square maps for polygons. Integrands
/// with a 1/|x - singular| singularity are then integrated to full accuracy.
QuadResult integrate_area(const Shape& s, const AreaIntegrand& f, const std::optional<Vec2>& singular = std::nullopt,
                          const QuadOptions& opt = {});

/// Area integral over a box, split at an interior singular point.
QuadResult integrate_area(const Box& b, const AreaIntegrand& f, const std::optional<Vec2>& singular = std::nullopt,
                          const QuadOptions& opt = {}, std::span<const double> xbreaks = {},
                          std::span<const double> ybreaks = {});

/// Superlevel region {g > t} restricted to a box, given implicitly by a C^1
/// function and its gradient. Grid lines of piecewise-smooth g go in the
/// breakpoint lists.
struct LevelRegion {
  std::function<double(const Vec2&)> g;
  std::function<Vec2(const Vec2&)> grad;
  double t = 0.0;
  Box window;
  std::vector<double> xbreaks;
  std::vector<double> ybreaks;
  std::vector<Vec2> extrema;  // local extrema of g; small components of {g > t} surround them
  int samples_per_line = 48;
};

/// Roots of s -> g(line(s)) - t on [a,b] located by sampling plus bisection.
std::vector<double> line_roots(const std::function<double(double)>& h, double a, double b,
                               std::span<const double> breaks, int samples);

/// Area integral of f over {g > t} inside the window by slicing in x with
/// exact crossing breakpoints in y.
QuadResult integrate_area(const LevelRegion& r, const AreaIntegrand& f, const QuadOptions& opt = {});

/// Integral over the level curve {g = t} inside the window of h(p, n) where n
/// is the interior normal of {g > t}. The curve is sliced along x where it is
/// flatter than 45 degrees and along y elsewhere, so both Jacobians stay
/// bounded by sqrt(2).
QuadResult integrate_boundary(const LevelRegion& r, const std::function<double(const Vec2&, const Vec2&)>& h,
                              const QuadOptions& opt = {});

}  // namespace pairlab

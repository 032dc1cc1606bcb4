#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pairlab/geometry.hpp"
#include "pairlab/ladder.hpp"
#include "pairlab/measures.hpp"

namespace pairlab {

using Vector2D = std::function<Vec2(const Vec2&)>;

// ---------------------------------------------------------------------------
// One dimension
// ---------------------------------------------------------------------------

/// Piecewise C^1 part w with its derivative; `breaks` lists the kinks.
struct AcPart {
  Scalar1D value;
  Scalar1D derivative;
  std::vector<double> breaks;
};

AcPart ac_constant(double c);
/// Linear interpolation of (xs, ys); constant beyond the first and last node.
AcPart ac_piecewise_linear(std::vector<double> xs, std::vector<double> ys);
/// amplitude * sin(frequency * x + phase) + offset
AcPart ac_sin(double amplitude, double frequency, double phase, double offset = 0.0);
/// sum_k coeffs[k] x^k
AcPart ac_poly(std::vector<double> coeffs);
/// amplitude * tanh((x - center) / width) + offset
AcPart ac_tanh(double amplitude, double center, double width, double offset = 0.0);
AcPart ac_sum(const std::vector<AcPart>& parts);

/// Jump with u_plus > u_minus; nu = +1 when u increases across x.
struct JumpPoint {
  double x = 0.0;
  double u_minus = 0.0;
  double u_plus = 0.0;
  int nu = 1;

  double size() const { return nu * (u_plus - u_minus); }  // right limit minus left limit
};

/// scale * V((x - c0) / (c1 - c0)) with V the ladder; 0 left of the carrier
/// and `scale` right of it.
struct CantorPart {
  CantorLadder ladder;
  double c0 = 0.0;
  double c1 = 1.0;
  double scale = 1.0;

  double value(double x) const { return scale * ladder.value((x - c0) / (c1 - c0)); }
  double map(double s) const { return c0 + s * (c1 - c0); }
};

/// Precise representatives at a point.
struct PreciseValue {
  bool jump = false;
  double u_tilde = 0.0;  // approximate limit (non-jump points)
  double u_minus = 0.0;
  double u_plus = 0.0;
  int nu = 0;
  double u_star = 0.0;
};

/// Superlevel set in 1D: finitely many disjoint open intervals; boundary
/// points interior to the domain with the interior normal (+1 at a left end).
struct BoundaryPoint1D {
  double x = 0.0;
  double normal = 1.0;
};

struct FinitePerimeterSet1D {
  std::vector<Interval> components;
  std::vector<BoundaryPoint1D> boundary;

  bool contains(double x) const;
  double perimeter() const { return static_cast<double>(boundary.size()); }
  /// Boundary point closest to x, if any lies within `radius`.
  std::optional<BoundaryPoint1D> nearest(double x, double radius) const;
};

/// BV function on an open interval given by its decomposition
///   u = w + sum_j (jump sizes) H(x - x_j) + Cantor part.
/// Jumps are stored normalized (u_plus > u_minus) and must agree with the
/// one-sided limits of the assembled function.
class BvFunction1D {
 public:
  BvFunction1D(Interval domain, AcPart ac, std::vector<JumpPoint> jumps = {},
               std::optional<CantorPart> cantor = std::nullopt);
  /// Same, with jumps given as (location, right limit minus left limit).
  static BvFunction1D with_jump_sizes(Interval domain, AcPart ac, std::vector<std::pair<double, double>> sizes,
                                      std::optional<CantorPart> cantor = std::nullopt);

  const Interval& domain() const { return domain_; }
  const AcPart& ac() const { return ac_; }
  const std::vector<JumpPoint>& jumps() const { return jumps_; }
  const std::optional<CantorPart>& cantor() const { return cantor_; }
  bool is_sobolev() const { return jumps_.empty() && !cantor_; }

  double operator()(double x) const { return right_limit(x); }
  double left_limit(double x) const;
  double right_limit(double x) const;
  /// Density of the absolutely continuous part of Du.
  double derivative(double x) const { return ac_.derivative(x); }

  /// Monotone cells: sorted points including the domain ends.
  const std::vector<double>& cells() const { return cells_; }
  /// Interior points where the integrand of a u-dependent quadrature may kink.
  std::vector<double> breakpoints() const;

  double min() const { return min_; }
  double max() const { return max_; }
  double sup_abs() const { return std::max(std::abs(min_), std::abs(max_)); }
  /// Range of u over the closure of [lo,hi] intersected with the domain.
  std::pair<double, double> range_on(double lo, double hi) const;

  /// Lebesgue integral of f (typically depending on u(x)) over [lo,hi].
  /// On a Cantor carrier the gaps down to a fixed level are integrated
  /// adaptively and the remaining construction intervals by the midpoint rule.
  QuadResult integrate(const Scalar1D& f, double lo, double hi, std::span<const double> extra_breaks,
                       double tol) const;
  /// Integrator for measures whose AC density depends on u.
  AcIntegrator integrator(std::vector<double> extra_breaks = {}) const;

  /// t-breakpoints for slicing: one-sided limits at cell ends and, on the
  /// Cantor carrier, images of construction points down to `level_depth()`.
  std::vector<double> level_breaks() const;
  /// Fine t-intervals coming from Cantor construction intervals, sorted.
  const std::vector<std::pair<double, double>>& fine_levels() const { return fine_levels_; }
  int level_depth() const;

 private:
  double jump_sum(double x, bool inclusive) const;
  double cantor_value(double x) const { return cantor_ ? cantor_->value(x) : 0.0; }

  Interval domain_;
  AcPart ac_;
  std::vector<JumpPoint> jumps_;
  std::optional<CantorPart> cantor_;
  std::vector<double> cells_;
  std::vector<std::pair<double, double>> fine_levels_;
  double min_ = 0.0, max_ = 0.0;
};

RadonMeasure1D gradient_measure(const BvFunction1D& u);
FinitePerimeterSet1D level_set(const BvFunction1D& u, double t);
PreciseValue precise_values(const BvFunction1D& u, double x);

/// Quadrature in t over [u.min(), u.max()] honouring plateau levels and the
/// Cantor fine intervals (fixed 4-point Gauss there).
QuadResult integrate_levels(const BvFunction1D& u, const Scalar1D& h, double tol);

// ---------------------------------------------------------------------------
// Two dimensions
// ---------------------------------------------------------------------------

struct SmoothSurface {
  Scalar2D value;
  Vector2D gradient;
  std::vector<double> xbreaks, ybreaks;
};

/// C^1 surface from node values on a tensor grid (bicubic Hermite with
/// finite-difference slopes).
SmoothSurface grid_surface(std::vector<double> xs, std::vector<double> ys, std::vector<double> values);
/// amplitude * exp(-|x - center|^2 / (2 width^2)) + offset
SmoothSurface gaussian_surface(const Vec2& center, double width, double amplitude, double offset = 0.0);

struct Region {
  Shape shape;
  double value = 0.0;
};

/// Superlevel set in 2D: either a union of shapes (piecewise constant u) or an
/// implicit region {g > t}.
struct BoundaryPiece2D {
  Shape shape;
  double sign = 1.0;  // interior normal of the set = sign * interior normal of the shape
  int region = -1;
};

struct FinitePerimeterSet2D {
  Box domain;
  bool background_in = false;
  std::vector<std::pair<Shape, bool>> shapes;
  std::vector<BoundaryPiece2D> pieces;
  std::optional<LevelRegion> implicit;

  bool contains(const Vec2& p) const;
  Vec2 interior_normal(const BoundaryPiece2D& piece, const Vec2& p) const {
    return piece.sign * pairlab::interior_normal(piece.shape, p);
  }
  Vec2 implicit_normal(const Vec2& p) const { return implicit->grad(p).normalized(); }
  double perimeter(const QuadOptions& opt = {}) const;
};

class BvFunction2D {
 public:
  static BvFunction2D smooth(Box domain, SmoothSurface s);
  static BvFunction2D piecewise_constant(Box domain, double background, std::vector<Region> regions);

  const Box& domain() const { return domain_; }
  bool is_smooth() const { return smooth_.has_value(); }
  const SmoothSurface& surface() const { return *smooth_; }
  double background() const { return background_; }
  const std::vector<Region>& regions() const { return regions_; }

  double operator()(const Vec2& p) const;
  Vec2 gradient(const Vec2& p) const { return smooth_ ? smooth_->gradient(p) : Vec2::Zero(); }
  double min() const { return min_; }
  double max() const { return max_; }
  double sup_abs() const { return std::max(std::abs(min_), std::abs(max_)); }
  std::pair<double, double> range_on(const Box& b) const;
  /// t-breakpoints: region values (piecewise constant) or critical values (smooth).
  std::vector<double> level_breaks() const;
  /// Local extrema of a smooth u (empty otherwise).
  const std::vector<Vec2>& extrema() const { return extrema_; }

 private:
  Box domain_;
  std::optional<SmoothSurface> smooth_;
  double background_ = 0.0;
  std::vector<Region> regions_;
  std::vector<Vec2> extrema_;
  std::vector<double> critical_values_;
  double min_ = 0.0, max_ = 0.0;
};

/// Du as a vector measure.
struct VectorSurfacePart {
  Shape shape;
  double weight = 0.0;  // density = weight * interior normal of the shape
};

struct GradientMeasure2D {
  Box domain;
  Vector2D ac;
  std::vector<double> xbreaks, ybreaks;
  std::vector<VectorSurfacePart> surfaces;

  RadonMeasure2D component(int i) const;
  RadonMeasure2D variation() const;
};

GradientMeasure2D gradient_measure(const BvFunction2D& u);
FinitePerimeterSet2D level_set(const BvFunction2D& u, double t);
PreciseValue precise_values(const BvFunction2D& u, const Vec2& x);

/// Integral over the area of the domain window `w` of f(p), where f may jump
/// across region boundaries of u: split into background and regions.
QuadResult integrate_piecewise(const BvFunction2D& u, const std::function<double(const Vec2&, double)>& f,
                               const Box& w, const std::optional<Vec2>& singular, double tol);

QuadResult integrate_levels(const BvFunction2D& u, const Scalar1D& h, double tol);

// ---------------------------------------------------------------------------

struct Comparison {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// int g d|Du| against the t-integral of the boundary integrals of {u > t}.
Comparison coarea_tv_check(const BvFunction1D& u, const Scalar1D& g, double tol = 1e-9);
Comparison coarea_tv_check(const BvFunction2D& u, const Scalar2D& g, double tol = 1e-7);

}  // namespace pairlab

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pairlab/geometry.hpp"
#include "pairlab/ladder.hpp"
#include "pairlab/quadrature.hpp"

namespace pairlab {

using Scalar1D = std::function<double(double)>;
using Scalar2D = std::function<double(const Vec2&)>;

/// Integrator for the absolutely continuous part: integral of f over [lo,hi]
/// to absolute tolerance tol. Used when the density is only Hoelder on a
/// Cantor carrier and plain adaptive quadrature would stall.
using AcIntegrator = std::function<QuadResult(const Scalar1D& f, double lo, double hi, double tol)>;

struct MeasureOptions {
  double abs_tol = 1e-9;  // per part
};

// ---------------------------------------------------------------------------
// One dimension
// ---------------------------------------------------------------------------

struct Atom {
  double x = 0.0;
  double weight = 0.0;
};

/// Singular-continuous part: scale * density(x) dF(x), where F is a Cantor
/// ladder stretched over the carrier [c0, c1]. An empty density means 1.
struct LadderPart {
  CantorLadder ladder;
  double c0 = 0.0;
  double c1 = 1.0;
  double scale = 1.0;
  Scalar1D density;

  double ladder_value(double x) const { return ladder.value((x - c0) / (c1 - c0)); }
  double density_at(double x) const { return density ? density(x) : 1.0; }
};

/// Signed Radon measure on an interval: absolutely continuous density,
/// finitely many atoms and at most one ladder part. Immutable once built.
struct RadonMeasure1D {
  Interval domain;
  Scalar1D ac;                     // empty means no AC part
  std::vector<double> ac_breaks;   // kinks of the AC density
  AcIntegrator ac_integrator;      // empty means adaptive quadrature with ac_breaks
  std::vector<Atom> atoms;         // strictly increasing locations
  std::optional<LadderPart> ladder;
  std::optional<Interval> window;  // set by restrict()
  bool empty_restriction = false;

  void validate() const;
  Interval effective_window() const;
};

/// Integral of a bounded Borel function against the measure; the error is
/// the sum of the per-part estimates.
QuadResult integrate(const RadonMeasure1D& m, const Scalar1D& g, const MeasureOptions& opt = {});

/// |m| with the same part structure.
RadonMeasure1D variation(const RadonMeasure1D& m);
/// m+ = (|m| + m) / 2, built part by part.
RadonMeasure1D positive_part(const RadonMeasure1D& m);

/// m restricted to B; atoms on the ends of B follow B's closedness flags.
RadonMeasure1D restrict(const RadonMeasure1D& m, const Interval& b);

double total_mass(const RadonMeasure1D& m, const MeasureOptions& opt = {});

// ---------------------------------------------------------------------------
// Two dimensions
// ---------------------------------------------------------------------------

struct SurfacePart {
  Curve curve;
  Scalar2D density;  // per unit length
};

/// Signed Radon measure on a rectangle: absolutely continuous density plus
/// densities carried by rectifiable curves. No Cantor parts in 2D.
struct RadonMeasure2D {
  Box domain;
  Scalar2D ac;
  std::optional<Vec2> ac_singular;  // integrable point singularity of `ac`
  std::vector<double> ac_xbreaks, ac_ybreaks;
  std::vector<SurfacePart> surfaces;
  std::optional<Box> window;
  bool empty_restriction = false;

  Box effective_window() const;
};

QuadResult integrate(const RadonMeasure2D& m, const Scalar2D& g, const MeasureOptions& opt = {});
RadonMeasure2D variation(const RadonMeasure2D& m);
RadonMeasure2D positive_part(const RadonMeasure2D& m);
RadonMeasure2D restrict(const RadonMeasure2D& m, const Box& b);
double total_mass(const RadonMeasure2D& m, const MeasureOptions& opt = {});

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

enum class ProfileKind { Bump, Plateau, Poly };

/// Radial-in-each-coordinate profile on [-1,1], equal to 1 at the centre.
/// Bump: exp(1 - 1/(1-s^2)). Plateau: 1 on |s| <= inner, C-infinity
/// transition to 0 at |s| = 1. Poly: (1-s^2)^2, only C^1.
struct Profile {
  ProfileKind kind = ProfileKind::Bump;
  double inner = 0.5;

  double value(double s) const;
  double derivative(double s) const;
  double max_derivative() const;
};

struct TestFunction1D {
  Profile profile;
  double center = 0.0;
  double half_width = 1.0;
  double amplitude = 1.0;

  double operator()(double x) const { return amplitude * profile.value((x - center) / half_width); }
  double gradient(double x) const {
    return amplitude * profile.derivative((x - center) / half_width) / half_width;
  }
  Interval support() const { return {center - half_width, center + half_width, true, true}; }
  double sup_norm() const { return std::abs(amplitude); }
  double gradient_sup_norm() const { return std::abs(amplitude) * profile.max_derivative() / half_width; }
  /// Member of the class of C^1_c functions with values in [0,1].
  bool in_unit_class() const { return amplitude >= 0.0 && amplitude <= 1.0; }
  std::vector<double> breakpoints() const;
};

struct TestFunction2D {
  Profile profile;
  Vec2 center = Vec2::Zero();
  Vec2 half_width = Vec2::Ones();
  double amplitude = 1.0;

  double operator()(const Vec2& x) const {
    return amplitude * profile.value((x.x() - center.x()) / half_width.x()) *
           profile.value((x.y() - center.y()) / half_width.y());
  }
  Vec2 gradient(const Vec2& x) const;
  Box support() const { return {center - half_width, center + half_width}; }
  double sup_norm() const { return std::abs(amplitude); }
  double gradient_sup_norm() const;
  bool in_unit_class() const { return amplitude >= 0.0 && amplitude <= 1.0; }
  std::vector<double> xbreaks() const;
  std::vector<double> ybreaks() const;
};

}  // namespace pairlab

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "pairlab/geometry.hpp"

namespace pairlab {

template <int Dim>
using Point = std::conditional_t<Dim == 1, double, Vec2>;
template <int Dim>
using Window = std::conditional_t<Dim == 1, Interval, Box>;

inline double dot(double a, double b) { return a * b; }
inline double dot(const Vec2& a, const Vec2& b) { return a.dot(b); }
inline double norm(double a) { return std::abs(a); }
inline double norm(const Vec2& a) { return a.norm(); }

/// Vector field b(x,t) on a domain of R^Dim, extended by zero outside.
/// All evaluators are pure; copies share nothing mutable.
template <int Dim>
struct Field {
  using P = Point<Dim>;

  std::string kind;
  Window<Dim> domain;
  std::function<P(const P&, double)> eval;
  std::function<double(const P&, double)> div;            // Div_x b_t
  std::function<P(const P&, double)> primitive;           // B(x,t) = int_0^t b(x,s) ds
  std::function<double(const P&, double)> div_primitive;  // Div_x B(x,t) = int_0^t Div_x b_s ds
  double lipschitz = 0.0;                                  // in t, uniformly in x
  std::function<double(const P&)> sigma;                  // sup over |t| <= t_bound of |Div_x b_t|
  /// sup |b| over K x [-tmax, tmax] for the window K.
  std::function<double(const Window<Dim>&, double)> sup_abs;
  double t_bound = std::numeric_limits<double>::infinity();
  std::optional<P> singular;  // point where Div_x b has an integrable singularity
  std::vector<double> xbreaks, ybreaks;
  std::vector<double> tbreaks;  // levels where b may be non-smooth in t
  bool t_independent = false;

  P operator()(const P& x, double t) const { return eval(x, t); }
};

using Field1D = Field<1>;
using Field2D = Field<2>;

/// Build a field from a spec {"kind", "params", "L", "M", "t_bound"}.
/// Kinds: constant, product, separable, sin_shift (1D and 2D), radial2d (2D).
/// The declared or derived constants are spot-checked on a sample grid;
/// AssumptionViolation names the failing clause.
Field1D make_field_1d(const nlohmann::json& spec, const Interval& domain);
Field2D make_field_2d(const nlohmann::json& spec, const Box& domain);

/// Sampled checks of the standing assumptions; throws AssumptionViolation.
void check_assumptions(const Field1D& f, int samples = 400);
void check_assumptions(const Field2D& f, int samples = 400);

/// x-convolution with the standard bump of radius eps, discretized by a fixed
/// product Gauss rule. The same weights act on b, Div b, B and Div B, so the
/// divergence of the result is the mollified divergence exactly.
/// WindowTooLarge unless the eps-neighbourhood of `window` lies in the domain.
Field1D mollify(const Field1D& f, double eps, const Interval& window);
Field2D mollify(const Field2D& f, double eps, const Box& window);

/// Cutoff sigma_k(t): 1 for |t| <= k-1, k-|t| up to |t| = k, then 0.
double sigma_k(int k, double t);
/// int_0^t sigma_k(s) ds
double sigma_k_primitive(int k, double t);

/// b^k(x,t) = sigma_k(t) b(x,t); primitives by t-quadrature split at the kinks.
Field1D truncate(const Field1D& f, int k);
Field2D truncate(const Field2D& f, int k);

/// b_tau(x,t) = b(x,tau): the field frozen at level tau.
Field1D freeze(const Field1D& f, double tau);
Field2D freeze(const Field2D& f, double tau);

/// Centered-difference divergence with step 1e-5 times the domain scale.
std::function<double(double, double)> centered_divergence(const std::function<double(double, double)>& b,
                                                         double scale);
std::function<double(const Vec2&, double)> centered_divergence(const std::function<Vec2(const Vec2&, double)>& b,
                                                              double scale);

}  // namespace pairlab

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pairlab/errors.hpp"

namespace pairlab {

/// Neumaier-compensated running sum. Used wherever many small terms are
/// accumulated so that results do not depend on the summation order beyond
/// rounding of the final value.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct QuadOptions {
  double abs_tol = 1e-10;
  int max_depth = 40;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  long evals = 0;
  double floor = 0.0;  // roundoff level of a single panel

  QuadResult& operator+=(const QuadResult& o) {
    value += o.value;
    error += o.error;
    converged = converged && o.converged;
    evals += o.evals;
    return *this;
  }
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline void check_finite(double v) {
  if (!std::isfinite(v)) throw LabError(ErrorKind::NonFiniteValue, "integrand returned a non-finite value");
}

template <class F>
QuadResult gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  check_finite(fc);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  std::array<double, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    f1[j] = f(c - dx);
    f2[j] = f(c + dx);
    check_finite(f1[j]);
    check_finite(f2[j]);
    const double s = f1[j] + f2[j];
    resk += kWgk[j] * s;
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  const double mean = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  QuadResult r;
  r.value = resk * h;
  resasc *= std::abs(h);
  resabs *= std::abs(h);
  double err = std::abs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double kEps = 2.220446049250313e-16;
  if (resabs > 1e-300 / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
  r.error = err;
  r.floor = 50.0 * kEps * resabs;
  r.evals = 15;
  return r;
}

template <class F>
void adapt(F& f, double a, double b, const QuadResult& whole, double tol_density, int depth,
           const QuadOptions& opt, CompensatedSum& sum, QuadResult& acc) {
  const double local_tol = tol_density * (b - a);
  if (whole.error <= local_tol || whole.error <= whole.floor || depth >= opt.max_depth ||
      b - a <= 1e-15 * (std::abs(a) + std::abs(b))) {
    sum.add(whole.value);
    acc.error += whole.error;
    return;
  }
  const double m = 0.5 * (a + b);
  const QuadResult left = gk15(f, a, m);
  const QuadResult right = gk15(f, m, b);
  acc.evals += left.evals + right.evals;
  adapt(f, a, m, left, tol_density, depth + 1, opt, sum, acc);
  adapt(f, m, b, right, tol_density, depth + 1, opt, sum, acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) quadrature with interval bisection. The
/// absolute tolerance is distributed over the interval proportionally to
/// panel length.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  QuadResult acc;
  if (!(b > a)) return acc;
  CompensatedSum sum;
  const QuadResult whole = detail::gk15(f, a, b);
  acc.evals = whole.evals;
  detail::adapt(f, a, b, whole, opt.abs_tol / (b - a), 0, opt, sum, acc);
  acc.value = sum.value();
  acc.converged = acc.converged && acc.error <= std::max(opt.abs_tol, 1e-13 * std::abs(acc.value)) * 1.0001;
  return acc;
}

/// Same as above with mandatory breakpoints. Breakpoints outside (a,b) are
/// ignored; duplicates are merged.
template <class F>
QuadResult integrate(F&& f, double a, double b, std::span<const double> breakpoints, const QuadOptions& opt = {}) {
  QuadResult acc;
  if (!(b > a)) return acc;
  std::vector<double> pts;
  pts.reserve(breakpoints.size() + 2);
  pts.push_back(a);
  for (double p : breakpoints)
    if (p > a && p < b) pts.push_back(p);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  CompensatedSum sum;
  const double density = opt.abs_tol / (b - a);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i], hi = pts[i + 1];
    if (!(hi > lo)) continue;
    QuadOptions local = opt;
    local.abs_tol = density * (hi - lo);
    QuadResult part = integrate(f, lo, hi, local);
    sum.add(part.value);
    part.value = 0.0;
    acc += part;
  }
  acc.value = sum.value();
  return acc;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

/// Fixed-order Gauss-Legendre on [a,b].
template <class F>
double integrate_fixed(F&& f, double a, double b, const GaussRule& rule) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  CompensatedSum s;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s.add(rule.weights[i] * f(c + h * rule.nodes[i]));
  return s.value() * h;
}

/// Nested adaptive integration over [x0,x1] x [y0,y1] with optional
/// breakpoint lines in each direction. The inner integral (over y) receives a
/// tolerance scaled by the outer width.
template <class F>
QuadResult integrate_box(F&& f, double x0, double x1, double y0, double y1, std::span<const double> xbreaks,
                         std::span<const double> ybreaks, const QuadOptions& opt = {}) {
  QuadResult inner_acc;
  inner_acc.evals = 0;
  QuadOptions inner = opt;
  inner.abs_tol = 0.25 * opt.abs_tol / std::max(x1 - x0, 1e-300);
  auto outer = [&](double x) {
    QuadResult r = integrate([&](double y) { return f(x, y); }, y0, y1, ybreaks, inner);
    inner_acc.evals += r.evals;
    inner_acc.converged = inner_acc.converged && r.converged;
    return r.value;
  };
  QuadOptions outer_opt = opt;
  outer_opt.abs_tol = 0.75 * opt.abs_tol;
  QuadResult res = integrate(outer, x0, x1, xbreaks, outer_opt);
  res.evals = inner_acc.evals;
  res.error += 0.25 * opt.abs_tol;
  res.converged = res.converged && inner_acc.converged;
  return res;
}

/// Integral over the triangle (apex, b, c) by the collapsed-square (Duffy)
/// map anchored at the apex; integrands with an integrable 1/|x - apex|
/// singularity become bounded. Returns the signed value (negative for a
/// clockwise triangle).
template <class F>
QuadResult integrate_triangle(F&& f, const Eigen::Vector2d& apex, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& c, const QuadOptions& opt = {}) {
  const Eigen::Vector2d e1 = b - apex, e2 = c - apex;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  if (det == 0.0) return {};
  auto g = [&](double s, double v) {
    const Eigen::Vector2d p = apex + s * ((1.0 - v) * e1 + v * e2);
    return f(p) * s;
  };
  QuadOptions scaled = opt;
  scaled.abs_tol = opt.abs_tol / std::abs(det);
  QuadResult r = integrate_box(g, 0.0, 1.0, 0.0, 1.0, {}, {}, scaled);
  r.value *= det;
  r.error *= std::abs(det);
  return r;
}

/// Aitken delta-squared extrapolation of the last three terms. Falls back to
/// the last term when the second difference vanishes.
inline double aitken(double s0, double s1, double s2) {
  const double d1 = s1 - s0, d2 = s2 - s1;
  const double den = d2 - d1;
  if (std::abs(den) <= 1e-300 || std::abs(den) < 1e-14 * (std::abs(d1) + std::abs(d2))) return s2;
  return s2 - d2 * d2 / den;
}

}  // namespace pairlab

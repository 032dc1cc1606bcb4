#include "pairlab/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace pairlab {

std::string_view to_string(Route r) {
  switch (r) {
    case Route::Distributional: return "distributional";
    case Route::Representation: return "representation";
    case Route::Traces: return "traces";
    case Route::Coarea: return "coarea";
  }
  return "unknown";
}

namespace {

constexpr double kLevelShift = 1e-12;

void require(const QuadResult& r, double tol, const char* what) {
  if (!r.converged && r.error > 10.0 * tol)
    throw LabError(ErrorKind::ToleranceNotMet,
                   std::string(what) + ": quadrature stalled at error " + std::to_string(r.error));
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Signed integral of h over [a,b] (a > b allowed).
double t_integral(const std::function<double(double)>& h, double a, double b, double tol,
                  const std::vector<double>& breaks = {}) {
  if (a == b) return 0.0;
  const double s = b > a ? 1.0 : -1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  std::vector<double> br;
  for (double t : breaks)
    if (t > lo && t < hi) br.push_back(t);
  QuadOptions q;
  q.abs_tol = tol;
  const QuadResult r = integrate(h, lo, hi, br, q);
  require(r, tol, "t-integral");
  return s * r.value;
}

// int_a^b |t - tau| dt for a <= b
double abs_moment(double a, double b, double tau) {
  if (tau <= a) return 0.5 * ((b - tau) * (b - tau) - (a - tau) * (a - tau));
  if (tau >= b) return 0.5 * ((tau - a) * (tau - a) - (tau - b) * (tau - b));
  return 0.5 * ((tau - a) * (tau - a) + (b - tau) * (b - tau));
}

FinitePerimeterSet1D level_set_near(const BvFunction1D& u, double t) {
  try {
    return level_set(u, t);
  } catch (const LabError& e) {
    if (e.kind() != ErrorKind::DegenerateLevel) throw;
  }
  return level_set(u, t + kLevelShift * (1.0 + std::abs(t)));
}

void require_inside(const Interval& support, const Interval& domain) {
  if (!(support.lo > domain.lo && support.hi < domain.hi))
    throw LabError(ErrorKind::InvalidArgument, "support of the test function must lie inside the domain");
}

void require_inside(const Box& support, const Box& domain) {
  if (!domain.contains_open(support.lo) || !domain.contains_open(support.hi))
    throw LabError(ErrorKind::InvalidArgument, "support of the test function must lie inside the domain");
}

double q_value(const Field1D& b, double t, double nu, double x, const PairingOptions& opt) {
  if (!opt.full_cylinders) return b(x, t) * nu;
  const CylAverage c = cylindrical_average(b, t, nu, x);
  if (!c.converged)
    throw LabError(ErrorKind::CylAverageDiverged, "cylindrical average did not converge at x = " + std::to_string(x));
  return c.value;
}

double q_value(const Field2D& b, double t, const Vec2& nu, const Vec2& x, const PairingOptions& opt) {
  const bool regular = !b.singular || (x - *b.singular).norm() > 0.0;
  if (!opt.full_cylinders && regular) return b(x, t).dot(nu);
  const CylAverage c = cylindrical_average(b, t, nu, x);
  if (!c.converged)
    throw LabError(ErrorKind::CylAverageDiverged, "cylindrical average did not converge");
  return c.value;
}

std::vector<double> merged(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Point at a fraction of the arclength of a curve.
Vec2 curve_point(const Curve& c, double f, double* arclength) {
  if (const auto* arc = std::get_if<CircleArc>(&c)) {
    if (arclength) *arclength = f * arc->radius * (arc->theta1 - arc->theta0);
    return arc->at(arc->theta0 + f * (arc->theta1 - arc->theta0));
  }
  const auto& pl = std::get<Polyline>(c);
  const double total = length(c);
  double target = f * total, walked = 0.0;
  if (arclength) *arclength = target;
  const std::size_t n = pl.points.size();
  const std::size_t segments = pl.closed ? n : n - 1;
  for (std::size_t i = 0; i < segments; ++i) {
    const Vec2& a = pl.points[i];
    const Vec2& b = pl.points[(i + 1) % n];
    const double len = (b - a).norm();
    if (walked + len >= target || i + 1 == segments) return a + (b - a) * std::clamp((target - walked) / len, 0.0, 1.0);
    walked += len;
  }
  return pl.points.front();
}

template <class F>
std::pair<double, bool> aitken_step(std::vector<double>& row, std::vector<double>& ext, F&& next, int max_depth,
                                    double threshold) {
  for (int i = 0; i < max_depth; ++i) {
    row.push_back(next(i));
    const std::size_t n = row.size();
    if (n >= 3) {
      ext.push_back(aitken(row[n - 3], row[n - 2], row[n - 1]));
      if (ext.size() >= 2 && std::abs(ext.back() - ext[ext.size() - 2]) <= threshold) return {ext.back(), true};
    }
  }
  return {ext.empty() ? row.back() : ext.back(), false};
}

}  // namespace

// ---------------------------------------------------------------------------
// Cylindrical averages
// ---------------------------------------------------------------------------

CylAverage cylindrical_average(const Field1D& b, double t, double nu, double x, const CylOptions& opt) {
  const double dist = std::min(x - b.domain.lo, b.domain.hi - x);
  const double r0 = opt.r0 > 0.0 ? opt.r0 : std::min(0.25 * dist, 0.1);
  if (!(r0 > 0.0)) throw LabError(ErrorKind::InvalidArgument, "cylinder centre must be interior to the domain");
  CylAverage out;
  std::vector<double> row, ext;
  const double brk[] = {x};
  auto avg = [&](int i) {
    const double r = std::ldexp(r0, -i);
    QuadOptions q;
    q.abs_tol = 1e-14 * 2.0 * r * (1.0 + std::abs(b(x, t)));
    return integrate([&](double y) { return b(y, t) * nu; }, x - r, x + r, brk, q).value / (2.0 * r);
  };
  const auto [v, ok] = aitken_step(row, ext, avg, opt.max_depth, opt.threshold);
  out.value = v;
  out.converged = ok;
  out.rows.push_back(row);
  out.inner_limits.push_back(v);
  return out;
}

CylAverage cylindrical_average(const Field2D& b, double t, const Vec2& nu, const Vec2& x, const CylOptions& opt) {
  const double r0 = opt.r0 > 0.0 ? opt.r0 : std::min(0.25 * b.domain.distance_to_boundary(x), 0.1);
  if (!(r0 > 0.0)) throw LabError(ErrorKind::InvalidArgument, "cylinder centre must be interior to the domain");
  const Vec2 n = nu.normalized();
  const Vec2 tau(-n.y(), n.x());
  const double scale = 1.0 + b(x, t).norm();
  CylAverage out;
  std::vector<double> outer_ext;
  bool inner_ok = true;
  const double zero[] = {0.0};
  auto inner_limit = [&](int j) {
    const double rho = std::ldexp(r0, -j);
    std::vector<double> row, ext;
    auto avg = [&](int i) {
      const double r = std::ldexp(r0, -i);
      QuadOptions q;
      q.abs_tol = 1e-13 * 4.0 * r * rho * scale;
      const QuadResult res = integrate_box(
          [&](double a, double c) { return b(Vec2(x + a * n + c * tau), t).dot(n); }, -r, r, -rho, rho, zero, zero, q);
      return res.value / (4.0 * r * rho);
    };
    const auto [v, ok] = aitken_step(row, ext, avg, opt.max_depth, opt.threshold);
    inner_ok = inner_ok && ok;
    out.rows.push_back(row);
    return v;
  };
  const auto [v, ok] = aitken_step(out.inner_limits, outer_ext, inner_limit, opt.max_depth, opt.threshold);
  out.value = v;
  out.converged = ok && inner_ok;
  return out;
}

NormalTrace1D normal_trace(const Field1D& b, double t, const FinitePerimeterSet1D& e, const CylOptions& opt) {
  NormalTrace1D tr;
  for (const auto& p : e.boundary) {
    const CylAverage c = cylindrical_average(b, t, p.normal, p.x, opt);
    tr.points.push_back(p);
    tr.density.push_back(c.value);
    tr.converged.push_back(c.converged);
  }
  return tr;
}

NormalTrace2D normal_trace(const Field2D& b, double t, const FinitePerimeterSet2D& e, int samples_per_piece,
                           const CylOptions& opt) {
  NormalTrace2D tr;
  for (const auto& piece : e.pieces) {
    const Curve c = boundary(piece.shape);
    std::vector<TraceSample> row;
    for (int k = 0; k < samples_per_piece; ++k) {
      TraceSample s;
      s.point = curve_point(c, (k + 0.5) / samples_per_piece, &s.s);
      const CylAverage q = cylindrical_average(b, t, e.interior_normal(piece, s.point), s.point, opt);
      s.value = q.value;
      s.converged = q.converged;
      row.push_back(s);
    }
    tr.pieces.push_back(std::move(row));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Distributional definition
// ---------------------------------------------------------------------------

DistributionalPairing pairing_distributional(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                             const PairingOptions& opt) {
  const Interval sp = phi.support();
  require_inside(sp, u.domain());
  const auto brk = phi.breakpoints();
  auto primitive_form = [&](double x) {
    const double v = u(x);
    return -phi(x) * b.div_primitive(x, v) - b.primitive(x, v) * phi.gradient(x);
  };
  auto double_form = [&](double x) {
    const double v = u(x), p = phi(x), dp = phi.gradient(x);
    return t_integral([&](double s) { return -p * b.div(x, s) - b(x, s) * dp; }, 0.0, v, 1e-14 * (1.0 + std::abs(v)), b.tbreaks);
  };
  const QuadResult r1 = u.integrate(primitive_form, sp.lo, sp.hi, brk, opt.tol);
  require(r1, opt.tol, "distributional pairing");
  const QuadResult r2 = u.integrate(double_form, sp.lo, sp.hi, brk, opt.tol);
  require(r2, opt.tol, "double-integral pairing");
  if (std::abs(r1.value - r2.value) > 10.0 * opt.tol * (1.0 + std::abs(r1.value)))
    throw LabError(ErrorKind::FormMismatch, "primitive and double-integral forms differ by " +
                                                std::to_string(std::abs(r1.value - r2.value)));
  return {r1.value, r2.value, r1.error};
}

namespace {

QuadResult integrate_against_u(const BvFunction2D& u, const std::function<double(const Vec2&, double)>& f,
                               const TestFunction2D& phi, const std::optional<Vec2>& singular, double tol) {
  const Box sp = phi.support();
  if (u.is_smooth()) {
    QuadOptions q;
    q.abs_tol = tol;
    const auto& s = u.surface();
    return integrate_area(
        sp, [&](const Vec2& p) { return f(p, s.value(p)); }, singular, q, merged(s.xbreaks, phi.xbreaks()),
        merged(s.ybreaks, phi.ybreaks()));
  }
  return integrate_piecewise(u, f, sp, singular, tol);
}

}  // namespace

DistributionalPairing pairing_distributional(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                             const PairingOptions& opt) {
  require_inside(phi.support(), u.domain());
  auto primitive_form = [&](const Vec2& p, double v) {
    return -phi(p) * b.div_primitive(p, v) - b.primitive(p, v).dot(phi.gradient(p));
  };
  auto double_form = [&](const Vec2& p, double v) {
    const double f = phi(p);
    const Vec2 g = phi.gradient(p);
    return t_integral([&](double s) { return -f * b.div(p, s) - b(p, s).dot(g); }, 0.0, v,
                      1e-14 * (1.0 + std::abs(v)), b.tbreaks);
  };
  const QuadResult r1 = integrate_against_u(u, primitive_form, phi, b.singular, opt.tol);
  require(r1, opt.tol, "distributional pairing");
  const QuadResult r2 = integrate_against_u(u, double_form, phi, b.singular, opt.tol);
  require(r2, opt.tol, "double-integral pairing");
  if (std::abs(r1.value - r2.value) > 10.0 * opt.tol * (1.0 + std::abs(r1.value)))
    throw LabError(ErrorKind::FormMismatch, "primitive and double-integral forms differ by " +
                                                std::to_string(std::abs(r1.value - r2.value)));
  return {r1.value, r2.value, r1.error};
}

// ---------------------------------------------------------------------------
// Representation by cylindrical averages
// ---------------------------------------------------------------------------

PairingMeasure1D pairing_by_representation(const Field1D& b, const BvFunction1D& u, const PairingOptions& opt) {
  PairingMeasure1D pm;
  pm.provenance = Route::Representation;
  auto self = std::make_shared<const BvFunction1D>(u);
  RadonMeasure1D& m = pm.measure;
  m.domain = {u.domain().lo, u.domain().hi, true, true};
  m.ac = [b, self](double x) { return b(x, (*self)(x)) * self->derivative(x); };
  m.ac_breaks = u.breakpoints();
  m.ac_integrator = u.integrator();
  pm.theta_ac = [b, self](double x) { return b(x, (*self)(x)) * sign_of(self->derivative(x)); };
  for (const auto& j : u.jumps()) {
    const double nu = j.nu;
    const double mass = t_integral([&](double t) { return q_value(b, t, nu, j.x, opt); }, j.u_minus, j.u_plus,
                                   1e-13 * (1.0 + j.u_plus - j.u_minus), b.tbreaks);
    m.atoms.push_back({j.x, mass});
    pm.theta_jump.push_back(mass / (j.u_plus - j.u_minus));
  }
  if (const auto& c = u.cantor()) {
    const double nu = sign_of(c->scale);
    pm.theta_cantor = [b, self, nu, opt](double x) { return q_value(b, (*self)(x), nu, x, opt); };
    m.ladder = LadderPart{c->ladder, c->c0, c->c1, std::abs(c->scale), pm.theta_cantor};
  }
  m.validate();
  return pm;
}

PairingMeasure2D pairing_by_representation(const Field2D& b, const BvFunction2D& u, const PairingOptions& opt) {
  PairingMeasure2D pm;
  pm.provenance = Route::Representation;
  RadonMeasure2D& m = pm.measure;
  m.domain = u.domain();
  if (u.is_smooth()) {
    const SmoothSurface s = u.surface();
    m.ac = [b, s](const Vec2& p) { return b(p, s.value(p)).dot(s.gradient(p)); };
    m.ac_xbreaks = s.xbreaks;
    m.ac_ybreaks = s.ybreaks;
    pm.theta_ac = [b, s](const Vec2& p) {
      const Vec2 g = s.gradient(p);
      const double n = g.norm();
      return n > 0.0 ? b(p, s.value(p)).dot(g) / n : 0.0;
    };
    return pm;
  }
  const double c0 = u.background();
  for (const auto& r : u.regions()) {
    const Shape shape = r.shape;
    const double v = r.value;
    // Du = (v - c0) n_int H^1 on the boundary; the t-integral runs from c0 to v.
    auto density = [b, shape, c0, v, opt](const Vec2& p) {
      const Vec2 n = interior_normal(shape, p);
      return t_integral([&](double t) { return q_value(b, t, n, p, opt); }, c0, v, 1e-13 * (1.0 + std::abs(v - c0)), b.tbreaks);
    };
    m.surfaces.push_back({boundary(shape), density});
    const double jump = std::abs(v - c0);
    pm.theta_surface.push_back([density, jump](const Vec2& p) { return density(p) / jump; });
  }
  return pm;
}

// ---------------------------------------------------------------------------
// Representation by traces on level sets
// ---------------------------------------------------------------------------

namespace {

// Trace of b_t on the boundary of {u > t} at the boundary point nearest x.
std::optional<double> level_trace(const Field1D& b, const BvFunction1D& u, double x, double t, double radius,
                                  const PairingOptions& opt) {
  const FinitePerimeterSet1D e = level_set_near(u, t);
  const auto p = e.nearest(x, radius);
  if (!p) return std::nullopt;
  return q_value(b, t, p->normal, p->x, opt);
}

// Average of the traces from the levels just below and just above t.
double two_sided_trace(const Field1D& b, const BvFunction1D& u, double x, double t, double shift, double radius,
                       const PairingOptions& opt) {
  const auto lo = level_trace(b, u, x, t - shift, radius, opt);
  const auto hi = level_trace(b, u, x, t + shift, radius, opt);
  if (lo && hi) return 0.5 * (*lo + *hi);
  if (lo) return *lo;
  if (hi) return *hi;
  throw LabError(ErrorKind::CrossValidationMismatch,
                 "no boundary of {u > t} near x = " + std::to_string(x) + " for t = " + std::to_string(t));
}

}  // namespace

PairingMeasure1D pairing_by_traces(const Field1D& b, const BvFunction1D& u, const PairingOptions& opt) {
  PairingMeasure1D pm;
  pm.provenance = Route::Traces;
  auto self = std::make_shared<const BvFunction1D>(u);
  const double length = u.domain().hi - u.domain().lo;
  RadonMeasure1D& m = pm.measure;
  m.domain = {u.domain().lo, u.domain().hi, true, true};
  pm.theta_ac = [b, self, length, opt](double x) {
    const double d = self->derivative(x);
    if (d == 0.0) return 0.0;
    const double t = (*self)(x);
    return two_sided_trace(b, *self, x, t, kLevelShift * (1.0 + std::abs(t)), 1e-6 * length, opt);
  };
  const Scalar1D theta_ac = pm.theta_ac;
  m.ac = [theta_ac, self](double x) { return theta_ac(x) * std::abs(self->derivative(x)); };
  m.ac_breaks = u.breakpoints();
  m.ac_integrator = u.integrator();
  for (const auto& j : u.jumps()) {
    auto trace = [&](double t) {
      const auto v = level_trace(b, u, j.x, t, 1e-9 * length, opt);
      if (!v) throw LabError(ErrorKind::CrossValidationMismatch, "jump point missing from a crossed level set");
      return *v;
    };
    const double mass = t_integral(trace, j.u_minus, j.u_plus, 1e-13 * (1.0 + j.u_plus - j.u_minus), b.tbreaks);
    m.atoms.push_back({j.x, mass});
    pm.theta_jump.push_back(mass / (j.u_plus - j.u_minus));
  }
  if (const auto& c = u.cantor()) {
    const double shift = kLevelShift * std::abs(c->scale);
    const double radius = 1e-3 * (c->c1 - c->c0);
    pm.theta_cantor = [b, self, shift, radius, opt](double x) {
      return two_sided_trace(b, *self, x, (*self)(x), shift, radius, opt);
    };
    m.ladder = LadderPart{c->ladder, c->c0, c->c1, std::abs(c->scale), pm.theta_cantor};
  }
  m.validate();
  return pm;
}

PairingMeasure2D pairing_by_traces(const Field2D& b, const BvFunction2D& u, const PairingOptions& opt) {
  PairingMeasure2D pm;
  pm.provenance = Route::Traces;
  RadonMeasure2D& m = pm.measure;
  m.domain = u.domain();
  if (u.is_smooth()) {
    auto self = std::make_shared<const BvFunction2D>(u);
    pm.theta_ac = [b, self, opt](const Vec2& p) {
      if (self->gradient(p).norm() == 0.0) return 0.0;
      const double t = (*self)(p);
      const FinitePerimeterSet2D e = level_set(*self, t);
      return q_value(b, t, e.implicit_normal(p), p, opt);
    };
    const Scalar2D theta = pm.theta_ac;
    m.ac = [theta, self](const Vec2& p) { return theta(p) * self->gradient(p).norm(); };
    m.ac_xbreaks = u.surface().xbreaks;
    m.ac_ybreaks = u.surface().ybreaks;
    return pm;
  }
  const std::vector<double> levels = u.level_breaks();
  const double c0 = u.background();
  for (std::size_t i = 0; i < u.regions().size(); ++i) {
    const Region& r = u.regions()[i];
    const double lo = std::min(c0, r.value), hi = std::max(c0, r.value);
    // {u > t} is fixed between consecutive values of u; take its boundary
    // piece along region i on each such t-interval.
    struct Slice {
      double ta, tb;
      FinitePerimeterSet2D set;
      BoundaryPiece2D piece;
    };
    std::vector<Slice> slices;
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
      const double ta = levels[k], tb = levels[k + 1];
      if (ta < lo || tb > hi) continue;
      FinitePerimeterSet2D e = level_set(u, 0.5 * (ta + tb));
      const auto it = std::find_if(e.pieces.begin(), e.pieces.end(),
                                   [&](const BoundaryPiece2D& p) { return p.region == static_cast<int>(i); });
      if (it == e.pieces.end())
        throw LabError(ErrorKind::CrossValidationMismatch, "region boundary missing from a crossed level set");
      const BoundaryPiece2D piece = *it;
      slices.push_back({ta, tb, std::move(e), piece});
    }
    auto density = [b, slices, opt](const Vec2& p) {
      double s = 0.0;
      for (const auto& sl : slices) {
        const Vec2 n = sl.set.interior_normal(sl.piece, p);
        s += t_integral([&](double t) { return q_value(b, t, n, p, opt); }, sl.ta, sl.tb,
                        1e-13 * (1.0 + sl.tb - sl.ta), b.tbreaks);
      }
      return s;
    };
    m.surfaces.push_back({boundary(r.shape), density});
    const double jump = hi - lo;
    pm.theta_surface.push_back([density, jump](const Vec2& p) { return density(p) / jump; });
  }
  return pm;
}

// ---------------------------------------------------------------------------

QuadResult pair(const PairingMeasure1D& mu, const TestFunction1D& phi, double tol) {
  return integrate(restrict(mu.measure, phi.support()), [&](double x) { return phi(x); }, {tol});
}

QuadResult pair(const PairingMeasure2D& mu, const TestFunction2D& phi, double tol) {
  return integrate(restrict(mu.measure, phi.support()), [&](const Vec2& p) { return phi(p); }, {tol});
}

QuadResult pair_variation(const PairingMeasure1D& mu, const TestFunction1D& phi, double tol) {
  return integrate(restrict(variation(mu.measure), phi.support()), [&](double x) { return phi(x); }, {tol});
}

QuadResult pair_variation(const PairingMeasure2D& mu, const TestFunction2D& phi, double tol) {
  return integrate(restrict(variation(mu.measure), phi.support()), [&](const Vec2& p) { return phi(p); }, {tol});
}

void cross_validate(const PairingMeasure1D& repr, const PairingMeasure1D& traces, const TestFunction1D& phi,
                    double tol) {
  const double a = pair(repr, phi).value, b = pair(traces, phi).value;
  if (std::abs(a - b) > tol * (1.0 + std::abs(a)))
    throw LabError(ErrorKind::CrossValidationMismatch,
                   "representation " + std::to_string(a) + " vs traces " + std::to_string(b));
}

void cross_validate(const PairingMeasure2D& repr, const PairingMeasure2D& traces, const TestFunction2D& phi,
                    double tol) {
  const double a = pair(repr, phi).value, b = pair(traces, phi).value;
  if (std::abs(a - b) > tol * (1.0 + std::abs(a)))
    throw LabError(ErrorKind::CrossValidationMismatch,
                   "representation " + std::to_string(a) + " vs traces " + std::to_string(b));
}

// ---------------------------------------------------------------------------
// Coarea identities
// ---------------------------------------------------------------------------

namespace {

BvFunction1D indicator(const BvFunction1D& u, const FinitePerimeterSet1D& e) {
  const double start = e.contains(0.5 * (u.domain().lo + u.cells()[1])) ? 1.0 : 0.0;
  std::vector<std::pair<double, double>> sizes;
  for (const auto& p : e.boundary) sizes.emplace_back(p.x, p.normal);
  return BvFunction1D::with_jump_sizes(u.domain(), ac_constant(start), std::move(sizes));
}

BvFunction2D indicator(const BvFunction2D& u, const FinitePerimeterSet2D& e) {
  const double bg = e.background_in ? 1.0 : 0.0;
  std::vector<Region> regions;
  for (const auto& [shape, in] : e.shapes)
    if ((in ? 1.0 : 0.0) != bg) regions.push_back({shape, in ? 1.0 : 0.0});
  return BvFunction2D::piecewise_constant(u.domain(), bg, std::move(regions));
}

}  // namespace

Comparison coarea_pairing_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                const PairingOptions& opt) {
  Comparison c;
  c.lhs = pairing_distributional(b, u, phi, opt).value;
  PairingOptions inner = opt;
  const double span = std::max(u.max() - u.min(), 1e-300);
  inner.tol = opt.tol / span;
  auto h = [&](double t) {
    const BvFunction1D chi = indicator(u, level_set_near(u, t));
    return pairing_distributional(freeze(b, t), chi, phi, inner).value;
  };
  const QuadResult r = integrate_levels(u, h, 10.0 * opt.tol);
  require(r, 10.0 * opt.tol, "coarea t-integral");
  c.rhs = r.value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

Comparison coarea_pairing_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                const PairingOptions& opt) {
  Comparison c;
  c.lhs = pairing_distributional(b, u, phi, opt).value;
  PairingOptions inner = opt;
  const double span = std::max(u.max() - u.min(), 1e-300);
  inner.tol = opt.tol / span;
  const Box sp = phi.support();
  auto h = [&](double t) {
    const FinitePerimeterSet2D e = level_set(u, t);
    if (e.implicit) {
      // -int_{E_t} div(phi b_t)
      LevelRegion r = *e.implicit;
      r.window = sp;
      QuadOptions q;
      q.abs_tol = inner.tol;
      const QuadResult a = integrate_area(
          r, [&](const Vec2& p) { return -phi(p) * b.div(p, t) - b(p, t).dot(phi.gradient(p)); }, q);
      require(a, inner.tol, "level-set area integral");
      return a.value;
    }
    return pairing_distributional(freeze(b, t), indicator(u, e), phi, inner).value;
  };
  const QuadResult r = integrate_levels(u, h, 10.0 * opt.tol);
  require(r, 10.0 * opt.tol, "coarea t-integral");
  c.rhs = r.value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

Comparison coarea_variation_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                  const PairingOptions& opt) {
  Comparison c;
  c.lhs = pair_variation(pairing_by_representation(b, u, opt), phi, opt.tol).value;
  auto h = [&](double t) {
    const FinitePerimeterSet1D e = level_set_near(u, t);
    double s = 0.0;
    for (const auto& p : e.boundary) {
      const double w = phi(p.x);
      if (w != 0.0) s += w * std::abs(q_value(b, t, p.normal, p.x, opt));
    }
    return s;
  };
  const QuadResult r = integrate_levels(u, h, 10.0 * opt.tol);
  c.rhs = r.value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

Comparison coarea_variation_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                  const PairingOptions& opt) {
  Comparison c;
  c.lhs = pair_variation(pairing_by_representation(b, u, opt), phi, opt.tol).value;
  const Box sp = phi.support();
  const double span = std::max(u.max() - u.min(), 1e-300);
  QuadOptions q;
  q.abs_tol = opt.tol / span;
  auto h = [&](double t) {
    const FinitePerimeterSet2D e = level_set(u, t);
    if (e.implicit) {
      LevelRegion r = *e.implicit;
      r.window = sp;
      return integrate_boundary(
                 r, [&](const Vec2& p, const Vec2& n) { return phi(p) * std::abs(q_value(b, t, n, p, opt)); }, q)
          .value;
    }
    double s = 0.0;
    for (const auto& piece : e.pieces) {
      s += integrate_curve(
               boundary(piece.shape),
               [&](const Vec2& p) { return phi(p) * std::abs(q_value(b, t, e.interior_normal(piece, p), p, opt)); },
               sp, q)
               .value;
    }
    return s;
  };
  const QuadResult r = integrate_levels(u, h, 10.0 * opt.tol);
  c.rhs = r.value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

// ---------------------------------------------------------------------------
// Chain rule
// ---------------------------------------------------------------------------

ChainRule chain_rule_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                           const PairingOptions& opt) {
  const Interval sp = phi.support();
  const auto brk = phi.breakpoints();
  ChainRule cr;
  const QuadResult dv =
      u.integrate([&](double x) { return -b.primitive(x, u(x)) * phi.gradient(x); }, sp.lo, sp.hi, brk, opt.tol);
  const QuadResult dx =
      u.integrate([&](double x) { return phi(x) * b.div_primitive(x, u(x)); }, sp.lo, sp.hi, brk, opt.tol);
  require(dv, opt.tol, "Div v");
  require(dx, opt.tol, "Div_x B term");
  cr.div_v = dv.value;
  cr.div_x_term = dx.value;
  cr.pairing = pairing_distributional(b, u, phi, opt).double_form;
  cr.residual = std::abs(cr.div_v - cr.div_x_term - cr.pairing);
  return cr;
}

ChainRule chain_rule_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                           const PairingOptions& opt) {
  ChainRule cr;
  const QuadResult dv = integrate_against_u(
      u, [&](const Vec2& p, double v) { return -b.primitive(p, v).dot(phi.gradient(p)); }, phi, b.singular, opt.tol);
  const QuadResult dx = integrate_against_u(
      u, [&](const Vec2& p, double v) { return phi(p) * b.div_primitive(p, v); }, phi, b.singular, opt.tol);
  require(dv, opt.tol, "Div v");
  require(dx, opt.tol, "Div_x B term");
  cr.div_v = dv.value;
  cr.div_x_term = dx.value;
  cr.pairing = pairing_distributional(b, u, phi, opt).double_form;
  cr.residual = std::abs(cr.div_v - cr.div_x_term - cr.pairing);
  return cr;
}

// ---------------------------------------------------------------------------
// Lipschitz comparison
// ---------------------------------------------------------------------------

LipschitzComparison lipschitz_comparison_check(const Field1D& b, const BvFunction1D& u, double tau,
                                               const TestFunction1D& phi, double slack, const PairingOptions& opt) {
  LipschitzComparison lc;
  lc.lhs = std::abs(pairing_distributional(b, u, phi, opt).value -
                    pairing_distributional(freeze(b, tau), u, phi, opt).value);
  Interval sp = phi.support();
  // int |u~ - tau| d|D^d u| over spt phi
  RadonMeasure1D d = variation(gradient_measure(u));
  d.atoms.clear();
  d.ac_integrator = u.integrator();
  const double diffuse =
      integrate(restrict(d, sp), [&](double x) { return std::abs(u(x) - tau); }, {opt.tol}).value;
  double jumps = 0.0;
  for (const auto& j : u.jumps())
    if (sp.contains(j.x)) jumps += abs_moment(j.u_minus, j.u_plus, tau);
  lc.bound = b.lipschitz * phi.sup_norm() * (diffuse + jumps);
  if (lc.lhs > lc.bound + slack)
    throw LabError(ErrorKind::BoundViolated,
                   "Lipschitz comparison: " + std::to_string(lc.lhs) + " > " + std::to_string(lc.bound));
  return lc;
}

LipschitzComparison lipschitz_comparison_check(const Field2D& b, const BvFunction2D& u, double tau,
                                               const TestFunction2D& phi, double slack, const PairingOptions& opt) {
  LipschitzComparison lc;
  lc.lhs = std::abs(pairing_distributional(b, u, phi, opt).value -
                    pairing_distributional(freeze(b, tau), u, phi, opt).value);
  const Box sp = phi.support();
  double total = 0.0;
  if (u.is_smooth()) {
    QuadOptions q;
    q.abs_tol = opt.tol;
    const auto& s = u.surface();
    total = integrate_area(
                sp, [&](const Vec2& p) { return std::abs(s.value(p) - tau) * s.gradient(p).norm(); }, std::nullopt, q,
                s.xbreaks, s.ybreaks)
                .value;
  } else {
    const double c0 = u.background();
    for (const auto& r : u.regions())
      total += clipped_length(boundary(r.shape), sp) *
               abs_moment(std::min(c0, r.value), std::max(c0, r.value), tau);
  }
  lc.bound = b.lipschitz * phi.sup_norm() * total;
  if (lc.lhs > lc.bound + slack)
    throw LabError(ErrorKind::BoundViolated,
                   "Lipschitz comparison: " + std::to_string(lc.lhs) + " > " + std::to_string(lc.bound));
  return lc;
}

// ---------------------------------------------------------------------------
// Mass bound
// ---------------------------------------------------------------------------

MassBound mass_bound_check(const Field1D& b, const BvFunction1D& u, const PairingMeasure1D& mu, const Interval& e) {
  MassBound mb;
  mb.lhs = total_mass(restrict(variation(mu.measure), e));
  mb.du_mass = total_mass(restrict(variation(gradient_measure(u)), e));
  const auto [lo, hi] = u.range_on(e.lo, e.hi);
  const double umax = std::max(std::abs(lo), std::abs(hi));
  mb.b_sup = b.sup_abs({e.lo, e.hi, true, true}, umax);
  mb.bound = mb.b_sup * mb.du_mass;
  return mb;
}

MassBound mass_bound_check(const Field2D& b, const BvFunction2D& u, const PairingMeasure2D& mu, const Box& e) {
  MassBound mb;
  mb.lhs = total_mass(restrict(variation(mu.measure), e));
  mb.du_mass = total_mass(restrict(gradient_measure(u).variation(), e));
  const auto [lo, hi] = u.range_on(e);
  const double umax = std::max(std::abs(lo), std::abs(hi));
  mb.b_sup = b.sup_abs(e, umax);
  mb.bound = mb.b_sup * mb.du_mass;
  return mb;
}

// ---------------------------------------------------------------------------
// Approximation by mollified fields
// ---------------------------------------------------------------------------

ConvergenceTable approximation_convergence_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                                 const std::vector<double>& eps, const PairingOptions& opt) {
  ConvergenceTable tab;
  tab.target = pairing_distributional(b, u, phi, opt).value;
  const Interval w = phi.support();
  for (double e : eps) {
    const double v = pairing_distributional(mollify(b, e, w), u, phi, opt).value;
    tab.rows.push_back({e, v, std::abs(v - tab.target)});
  }
  return tab;
}

ConvergenceTable approximation_convergence_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                                 const std::vector<double>& eps, const PairingOptions& opt) {
  ConvergenceTable tab;
  tab.target = pair(pairing_by_representation(b, u, opt), phi, opt.tol).value;
  const Box w = phi.support();
  for (double e : eps) {
    const double v = pair(pairing_by_representation(mollify(b, e, w), u, opt), phi, opt.tol).value;
    tab.rows.push_back({e, v, std::abs(v - tab.target)});
  }
  return tab;
}

}  // namespace pairlab

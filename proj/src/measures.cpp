#include "pairlab/measures.hpp"

#include <algorithm>
#include <cmath>

namespace pairlab {

namespace {

void throw_if_stalled(const QuadResult& r, double tol, const char* what) {
  if (!r.converged && r.error > 10.0 * tol)
    throw LabError(ErrorKind::ToleranceNotMet, std::string(what) + ": adaptive refinement stalled at error " +
                                                   std::to_string(r.error));
}

double smooth_exp(double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; }

double smooth_step(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const double a = smooth_exp(z), b = smooth_exp(1.0 - z);
  return a / (a + b);
}

double smooth_step_derivative(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  const double a = smooth_exp(z), b = smooth_exp(1.0 - z);
  const double da = a / (z * z), db = -b / ((1.0 - z) * (1.0 - z));
  const double s = a + b;
  return (da * s - a * (da + db)) / (s * s);
}

}  // namespace

// ---------------------------------------------------------------------------

void RadonMeasure1D::validate() const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i].x) || !std::isfinite(atoms[i].weight))
      throw LabError(ErrorKind::NonFiniteValue, "atom with non-finite data");
    if (atoms[i].x < domain.lo || atoms[i].x > domain.hi)
      throw LabError(ErrorKind::InvalidArgument, "atom outside the domain interval");
    if (i > 0 && !(atoms[i].x > atoms[i - 1].x))
      throw LabError(ErrorKind::InvalidArgument, "atom locations must be strictly increasing");
  }
  if (ladder) {
    ladder->ladder.validate();
    if (!(ladder->c1 > ladder->c0) || ladder->c0 < domain.lo || ladder->c1 > domain.hi)
      throw LabError(ErrorKind::InvalidArgument, "ladder carrier must be a non-empty subinterval of the domain");
  }
}

Interval RadonMeasure1D::effective_window() const {
  Interval d = domain;
  d.closed_lo = d.closed_hi = true;
  if (!window) return d;
  auto w = intersect(d, *window);
  return w ? *w : Interval{d.lo, d.lo, false, false};
}

QuadResult integrate(const RadonMeasure1D& m, const Scalar1D& g, const MeasureOptions& opt) {
  QuadResult total;
  if (m.empty_restriction) return total;
  const Interval w = m.effective_window();
  CompensatedSum sum;
  if (m.ac && w.hi > w.lo) {
    QuadOptions q;
    q.abs_tol = opt.abs_tol;
    auto f = [&](double x) { return g(x) * m.ac(x); };
    QuadResult r = m.ac_integrator ? m.ac_integrator(f, w.lo, w.hi, opt.abs_tol)
                                   : integrate(f, w.lo, w.hi, m.ac_breaks, q);
    throw_if_stalled(r, opt.abs_tol, "absolutely continuous part");
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  }
  for (const Atom& a : m.atoms) {
    if (!w.contains(a.x)) continue;
    const double v = g(a.x) * a.weight;
    if (!std::isfinite(v)) throw LabError(ErrorKind::NonFiniteValue, "integrand non-finite at an atom");
    sum.add(v);
  }
  if (m.ladder && w.hi > w.lo) {
    const LadderPart& lp = *m.ladder;
    const double span = lp.c1 - lp.c0;
    auto h = [&](double s) {
      const double x = lp.c0 + s * span;
      const double v = g(x) * lp.density_at(x);
      if (!std::isfinite(v)) throw LabError(ErrorKind::NonFiniteValue, "integrand non-finite on the ladder");
      return v;
    };
    const auto r = lp.ladder.stieltjes(h, (w.lo - lp.c0) / span, (w.hi - lp.c0) / span);
    sum.add(lp.scale * r.value);
    total.error += std::abs(lp.scale) * r.error;
  }
  total.value = sum.value();
  return total;
}

RadonMeasure1D variation(const RadonMeasure1D& m) {
  RadonMeasure1D v = m;
  if (m.ac) {
    Scalar1D f = m.ac;
    v.ac = [f](double x) { return std::abs(f(x)); };
  }
  for (Atom& a : v.atoms) a.weight = std::abs(a.weight);
  if (v.ladder) {
    v.ladder->scale = std::abs(v.ladder->scale);
    if (m.ladder->density) {
      Scalar1D d = m.ladder->density;
      v.ladder->density = [d](double x) { return std::abs(d(x)); };
    }
  }
  return v;
}

RadonMeasure1D positive_part(const RadonMeasure1D& m) {
  RadonMeasure1D v = m;
  if (m.ac) {
    Scalar1D f = m.ac;
    v.ac = [f](double x) { return std::max(f(x), 0.0); };
  }
  for (Atom& a : v.atoms) a.weight = std::max(a.weight, 0.0);
  if (v.ladder) {
    const double sign = m.ladder->scale < 0.0 ? -1.0 : 1.0;
    Scalar1D d = m.ladder->density;
    v.ladder->scale = std::abs(v.ladder->scale);
    v.ladder->density = [d, sign](double x) { return std::max(sign * (d ? d(x) : 1.0), 0.0); };
  }
  return v;
}

RadonMeasure1D restrict(const RadonMeasure1D& m, const Interval& b) {
  RadonMeasure1D r = m;
  auto w = intersect(m.effective_window(), b);
  if (!w) {
    r.empty_restriction = true;
    r.ac = nullptr;
    r.atoms.clear();
    r.ladder.reset();
    return r;
  }
  r.window = *w;
  return r;
}

double total_mass(const RadonMeasure1D& m, const MeasureOptions& opt) {
  return integrate(m, [](double) { return 1.0; }, opt).value;
}

// ---------------------------------------------------------------------------

Box RadonMeasure2D::effective_window() const {
  if (!window) return domain;
  auto w = intersect(domain, *window);
  return w ? *w : Box{domain.lo, domain.lo};
}

QuadResult integrate(const RadonMeasure2D& m, const Scalar2D& g, const MeasureOptions& opt) {
  QuadResult total;
  if (m.empty_restriction) return total;
  const Box w = m.effective_window();
  CompensatedSum sum;
  if (m.ac && w.area() > 0.0) {
    QuadOptions q;
    q.abs_tol = opt.abs_tol;
    QuadResult r = integrate_area(
        w, [&](const Vec2& p) { return g(p) * m.ac(p); }, m.ac_singular, q, m.ac_xbreaks, m.ac_ybreaks);
    throw_if_stalled(r, opt.abs_tol, "absolutely continuous part");
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  }
  const std::optional<Box> clip = m.window ? std::optional<Box>(w) : std::nullopt;
  for (const SurfacePart& s : m.surfaces) {
    QuadOptions q;
    q.abs_tol = opt.abs_tol;
    QuadResult r = integrate_curve(s.curve, [&](const Vec2& p) { return g(p) * s.density(p); }, clip, q);
    throw_if_stalled(r, opt.abs_tol, "surface part");
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  }
  total.value = sum.value();
  return total;
}

RadonMeasure2D variation(const RadonMeasure2D& m) {
  RadonMeasure2D v = m;
  if (m.ac) {
    Scalar2D f = m.ac;
    v.ac = [f](const Vec2& p) { return std::abs(f(p)); };
  }
  for (SurfacePart& s : v.surfaces) {
    Scalar2D d = s.density;
    s.density = [d](const Vec2& p) { return std::abs(d(p)); };
  }
  return v;
}

RadonMeasure2D positive_part(const RadonMeasure2D& m) {
  RadonMeasure2D v = m;
  if (m.ac) {
    Scalar2D f = m.ac;
    v.ac = [f](const Vec2& p) { return std::max(f(p), 0.0); };
  }
  for (SurfacePart& s : v.surfaces) {
    Scalar2D d = s.density;
    s.density = [d](const Vec2& p) { return std::max(d(p), 0.0); };
  }
  return v;
}

RadonMeasure2D restrict(const RadonMeasure2D& m, const Box& b) {
  RadonMeasure2D r = m;
  auto w = intersect(m.effective_window(), b);
  if (!w) {
    r.empty_restriction = true;
    r.ac = nullptr;
    r.surfaces.clear();
    return r;
  }
  r.window = *w;
  return r;
}

double total_mass(const RadonMeasure2D& m, const MeasureOptions& opt) {
  return integrate(m, [](const Vec2&) { return 1.0; }, opt).value;
}

// ---------------------------------------------------------------------------

double Profile::value(double s) const {
  const double a = std::abs(s);
  if (a >= 1.0) return 0.0;
  switch (kind) {
    case ProfileKind::Bump: return std::exp(1.0 - 1.0 / (1.0 - s * s));
    case ProfileKind::Plateau: return a <= inner ? 1.0 : smooth_step((1.0 - a) / (1.0 - inner));
    case ProfileKind::Poly: return (1.0 - s * s) * (1.0 - s * s);
  }
  return 0.0;
}

double Profile::derivative(double s) const {
  const double a = std::abs(s);
  if (a >= 1.0) return 0.0;
  switch (kind) {
    case ProfileKind::Bump: {
      const double q = 1.0 - s * s;
      return value(s) * (-2.0 * s / (q * q));
    }
    case ProfileKind::Plateau: {
      if (a <= inner) return 0.0;
      const double sign = s > 0.0 ? 1.0 : -1.0;
      return -sign * smooth_step_derivative((1.0 - a) / (1.0 - inner)) / (1.0 - inner);
    }
    case ProfileKind::Poly: return -4.0 * s * (1.0 - s * s);
  }
  return 0.0;
}

double Profile::max_derivative() const {
  double best = 0.0;
  constexpr int n = 20000;
  for (int i = 0; i <= n; ++i) best = std::max(best, std::abs(derivative(-1.0 + 2.0 * i / n)));
  return best * (1.0 + 1e-3);
}

std::vector<double> TestFunction1D::breakpoints() const {
  std::vector<double> b{center - half_width, center, center + half_width};
  if (profile.kind == ProfileKind::Plateau) {
    b.push_back(center - profile.inner * half_width);
    b.push_back(center + profile.inner * half_width);
  }
  std::sort(b.begin(), b.end());
  return b;
}

Vec2 TestFunction2D::gradient(const Vec2& x) const {
  const double sx = (x.x() - center.x()) / half_width.x();
  const double sy = (x.y() - center.y()) / half_width.y();
  return amplitude * Vec2(profile.derivative(sx) * profile.value(sy) / half_width.x(),
                          profile.value(sx) * profile.derivative(sy) / half_width.y());
}

double TestFunction2D::gradient_sup_norm() const {
  const double d = profile.max_derivative();
  return std::abs(amplitude) * d * std::hypot(1.0 / half_width.x(), 1.0 / half_width.y());
}

namespace {
std::vector<double> axis_breaks(const Profile& p, double c, double h) {
  std::vector<double> b{c - h, c, c + h};
  if (p.kind == ProfileKind::Plateau) {
    b.push_back(c - p.inner * h);
    b.push_back(c + p.inner * h);
  }
  std::sort(b.begin(), b.end());
  return b;
}
}  // namespace

std::vector<double> TestFunction2D::xbreaks() const { return axis_breaks(profile, center.x(), half_width.x()); }
std::vector<double> TestFunction2D::ybreaks() const { return axis_breaks(profile, center.y(), half_width.y()); }

}  // namespace pairlab

#include "pairlab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace pairlab {

std::string_view to_string(SeqMode m) {
  switch (m) {
    case SeqMode::L1: return "L1";
    case SeqMode::WeakStar: return "weak*";
    case SeqMode::LinfL1: return "Linf-L1";
  }
  return "unknown";
}

SeqMode seq_mode_from_string(std::string_view s) {
  if (s == "L1" || s == "l1") return SeqMode::L1;
  if (s == "weak*" || s == "weak_star" || s == "weakstar") return SeqMode::WeakStar;
  if (s == "Linf-L1" || s == "linf_l1" || s == "L1loc") return SeqMode::LinfL1;
  throw LabError(ErrorKind::SpecError, "unknown sequence mode '" + std::string(s) + "'");
}

std::string_view to_string(Functional f) {
  switch (f) {
    case Functional::F: return "F";
    case Functional::Gplus: return "G+";
    case Functional::G: return "G";
  }
  return "unknown";
}

namespace {

// Standard bump exp(-1/(1-s^2)) on (-1,1) with unit mass, and its
// distribution function tabulated for cubic Hermite lookup.
class Kernel {
 public:
  Kernel() {
    QuadOptions q;
    q.abs_tol = 1e-16;
    auto raw = [](double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; };
    norm_ = 1.0 / integrate(raw, -1.0, 1.0, q).value;
    z_.resize(kCells + 1);
    cdf_.resize(kCells + 1);
    for (int i = 0; i <= kCells; ++i) z_[i] = -1.0 + 2.0 * i / kCells;
    CompensatedSum acc;
    cdf_[0] = 0.0;
    for (int i = 1; i <= kCells; ++i) {
      acc.add(integrate([&](double s) { return rho(s); }, z_[i - 1], z_[i], q).value);
      cdf_[i] = acc.value();
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
  }

  double rho(double s) const { return std::abs(s) < 1.0 ? norm_ * std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

  double cdf(double s) const {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double pos = (s + 1.0) * 0.5 * kCells;
    const int i = std::min(static_cast<int>(pos), kCells - 1);
    const double h = z_[i + 1] - z_[i], t = pos - i;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * cdf_[i] + h10 * h * rho(z_[i]) + h01 * cdf_[i + 1] + h11 * h * rho(z_[i + 1]);
  }

 private:
  static constexpr int kCells = 4096;
  double norm_ = 1.0;
  std::vector<double> z_, cdf_;
};

const Kernel& kernel() {
  static const Kernel k;
  return k;
}

// Cubic Hermite interpolant on sorted nodes; constant outside.
struct HermiteTable {
  std::vector<double> x, v, d, slope;

  void finish() {
    slope.resize(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) slope[i] = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
  }

  std::size_t cell(double t) const {
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - x.begin() - 1, 0, x.size() - 2));
  }
  double value(double t) const {
    if (t <= x.front()) return v.front();
    if (t >= x.back()) return v.back();
    const std::size_t i = cell(t);
    const double h = x[i + 1] - x[i], s = (t - x[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * v[i] + h10 * h * d[i] + h01 * v[i + 1] + h11 * h * d[i + 1];
  }
  double derivative(double t) const {
    if (t <= x.front() || t >= x.back()) return 0.0;
    const std::size_t i = cell(t);
    const double h = x[i + 1] - x[i], s = (t - x[i]) / h;
    const double g10 = 3 * s * s - 4 * s + 1, g11 = 3 * s * s - 2 * s;
    // the secant is fixed per cell; recombining v[i], v[i+1] per call is noisy
    return 6 * s * (1 - s) * slope[i] + g10 * d[i] + g11 * d[i + 1];
  }
};

Sobolev1D from_table(std::shared_ptr<const HermiteTable> t) {
  Sobolev1D s;
  s.value = [t](double x) { return t->value(x); };
  s.derivative = [t](double x) { return t->derivative(x); };
  s.breaks = t->x;
  return s;
}

void sort_unique(std::vector<double>& v, double tol) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [tol](double a, double b) { return b - a <= tol; }), v.end());
}

// Visit the construction intervals of the ladder: `descend(lo, len, depth)`
// returns whether to refine further.
template <class F>
void walk_ladder(const CantorLadder& lad, double lo, double len, int depth, double mass, F&& visit) {
  if (!visit(lo, len, depth, mass)) return;
  const double r = lad.piece_ratio();
  walk_ladder(lad, lo, len * r, depth + 1, 0.5 * mass, visit);
  walk_ladder(lad, lo + (1.0 - r) * len, len * r, depth + 1, 0.5 * mass, visit);
}

struct Mollified {
  double value = 0.0, derivative = 0.0;
};

// (rho_eps * u)(x) and its derivative, u extended by its end values.
Mollified mollify_at(const BvFunction1D& u, double x, double eps) {
  const Kernel& k = kernel();
  const Interval& d = u.domain();
  const AcPart& ac = u.ac();
  Mollified m;

  // AC part: int rho(s) w(clamp(x - eps s)) ds
  std::vector<double> brk;
  for (double p : ac.breaks) brk.push_back((x - p) / eps);
  brk.push_back((x - d.lo) / eps);
  brk.push_back((x - d.hi) / eps);
  std::erase_if(brk, [](double s) { return !(s > -1.0 && s < 1.0); });
  std::sort(brk.begin(), brk.end());
  QuadOptions q;
  const double scale = 1.0 + std::abs(ac.value(std::clamp(x, d.lo, d.hi)));
  q.abs_tol = 1e-13 * scale;
  m.value = integrate([&](double s) { return k.rho(s) * ac.value(std::clamp(x - eps * s, d.lo, d.hi)); }, -1.0, 1.0,
                      brk, q)
                .value;
  m.derivative = integrate(
                     [&](double s) {
                       const double y = x - eps * s;
                       return (y > d.lo && y < d.hi) ? k.rho(s) * ac.derivative(y) : 0.0;
                     },
                     -1.0, 1.0, brk, q)
                     .value;

  for (const auto& j : u.jumps()) {
    const double s = (x - j.x) / eps;
    m.value += j.size() * k.cdf(s);
    m.derivative += j.size() * k.rho(s) / eps;
  }

  if (const auto& c = u.cantor()) {
    const double len = c->c1 - c->c0;
    const double leaf = eps / 32.0;
    double v = 0.0, dv = 0.0;
    walk_ladder(c->ladder, c->c0, len, 0, 1.0, [&](double lo, double l, int, double mass) {
      const double hi = lo + l;
      if (hi <= x - eps) {
        v += mass;
        return false;
      }
      if (lo >= x + eps) return false;
      if (l <= leaf) {
        const double s = (x - (lo + 0.5 * l)) / eps;
        v += mass * k.cdf(s);
        dv += mass * k.rho(s) / eps;
        return false;
      }
      return true;
    });
    m.value += c->scale * v;
    m.derivative += c->scale * dv;
  }
  return m;
}

void add_grid(std::vector<double>& nodes, double lo, double hi, double h) {
  if (!(hi > lo)) return;
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / h)));
  for (int i = 0; i <= n; ++i) nodes.push_back(lo + (hi - lo) * i / n);
}

double apply(Functional f, double m) {
  switch (f) {
    case Functional::F: return std::abs(m);
    case Functional::Gplus: return std::max(m, 0.0);
    case Functional::G: return m;
  }
  return m;
}

double min_tail(const std::vector<SequenceRow>& rows, std::size_t tail = 5) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = rows.size() > tail ? rows.size() - tail : 0; i < rows.size(); ++i) m = std::min(m, rows[i].value);
  return m;
}

// Liminf estimate: a tail whose increments shrink geometrically is extrapolated
// to its limit, anything else falls back to the tail minimum.
double tail_limit(const std::vector<SequenceRow>& rows, bool* extrapolated = nullptr) {
  const std::size_t n = rows.size();
  if (extrapolated) *extrapolated = false;
  if (n < 5) return min_tail(rows);
  double d[4], r = 0.0;
  for (int i = 0; i < 4; ++i) d[i] = rows[n - 4 + i].value - rows[n - 5 + i].value;
  for (int i = 1; i < 4; ++i) {
    if (d[i - 1] == 0.0) return min_tail(rows);
    r = d[i] / d[i - 1];
    if (!(r > 0.2 && r < 0.8)) return min_tail(rows);
  }
  if (extrapolated) *extrapolated = true;
  return rows[n - 1].value + d[3] * r / (1.0 - r);
}

void require_long(std::size_t n) {
  if (n < 12) throw LabError(ErrorKind::InvalidArgument, "liminf estimates need at least 12 sequence elements");
}

Interval open(const Interval& a) { return {a.lo, a.hi, false, false}; }

}  // namespace

// ---------------------------------------------------------------------------

ExtendedValue f_phi_smooth(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi, const Interval& a,
                           double tol) {
  if (!u.is_sobolev()) return ExtendedValue::inf();
  const auto brk = phi.breakpoints();
  const QuadResult r =
      u.integrate([&](double x) { return phi(x) * b(x, u(x)) * u.derivative(x); }, a.lo, a.hi, brk, tol);
  return {r.value, false};
}

ExtendedValue f_phi_smooth(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi, const Box& a,
                           double tol) {
  if (!u.is_smooth()) return ExtendedValue::inf();
  QuadOptions q;
  q.abs_tol = tol;
  const auto& s = u.surface();
  const QuadResult r = integrate_area(
      a, [&](const Vec2& p) { return phi(p) * b(p, s.value(p)).dot(s.gradient(p)); }, b.singular, q, s.xbreaks,
      s.ybreaks);
  return {r.value, false};
}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

std::vector<double> geometric_schedule(double eps0, int n, double ratio) {
  std::vector<double> e;
  for (int i = 0; i < n; ++i) e.push_back(eps0 * std::pow(ratio, i));
  return e;
}

Sequence1D mollified_sequence(const BvFunction1D& u, const Interval& window, const std::vector<double>& eps) {
  Sequence1D seq;
  seq.generator = "mollified";
  seq.mode = SeqMode::WeakStar;
  seq.window = window;
  const double width = window.hi - window.lo;
  for (double e : eps) {
    if (!(e > 0.0)) throw LabError(ErrorKind::InvalidArgument, "mollification radius must be positive");
    std::vector<double> nodes;
    add_grid(nodes, window.lo, window.hi, width / 512.0);
    auto active = [&](double lo, double hi) {
      add_grid(nodes, std::max(lo - e, window.lo), std::min(hi + e, window.hi), e / 64.0);
    };
    for (const auto& j : u.jumps()) active(j.x, j.x);
    for (double p : u.ac().breaks) active(p, p);
    active(u.domain().lo, u.domain().lo);
    active(u.domain().hi, u.domain().hi);
    if (const auto& c = u.cantor()) {
      walk_ladder(c->ladder, c->c0, c->c1 - c->c0, 0, 1.0, [&](double lo, double l, int, double) {
        if (lo + l < window.lo - e || lo > window.hi + e) return false;
        if (l * c->ladder.piece_ratio() < e) {
          active(lo, lo + l);
          return false;
        }
        return true;
      });
    }
    sort_unique(nodes, e / 1024.0);
    nodes.back() = window.hi;
    auto t = std::make_shared<HermiteTable>();
    t->x = nodes;
    for (double x : nodes) {
      const Mollified m = mollify_at(u, x, e);
      t->v.push_back(m.value);
      t->d.push_back(m.derivative);
    }
    t->finish();
    seq.elements.push_back({e, from_table(t)});
  }
  return seq;
}

Sequence1D oscillating_sequence(const Sequence1D& base, double amplitude, double frequency) {
  Sequence1D seq = base;
  seq.generator = base.generator + "+oscillation";
  seq.mode = SeqMode::L1;
  for (std::size_t i = 0; i < seq.elements.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double a = amplitude / n, w = frequency * n;
    Sobolev1D& s = seq.elements[i].u;
    const Scalar1D v = s.value, d = s.derivative;
    s.value = [v, a, w](double x) { return v(x) + a * std::sin(w * x); };
    s.derivative = [d, a, w](double x) { return d(x) + a * w * std::cos(w * x); };
    // quarter periods as extra breaks keep each panel monotone in the phase
    const double step = 0.5 * std::numbers::pi / w;
    for (double x = std::ceil(seq.window.lo / step) * step; x < seq.window.hi; x += step) s.breaks.push_back(x);
    sort_unique(s.breaks, 0.0);
  }
  return seq;
}

Sequence1D spike_sequence(const Sequence1D& base, double x0, double height, double width) {
  Sequence1D seq = base;
  seq.generator = base.generator + "+spike";
  seq.mode = SeqMode::LinfL1;
  const Profile bump{ProfileKind::Bump, 0.5};
  for (std::size_t i = 0; i < seq.elements.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double h = height * n, w = width / (n * n * n);
    Sobolev1D& s = seq.elements[i].u;
    const Scalar1D v = s.value, d = s.derivative;
    s.value = [v, h, w, x0, bump](double x) { return v(x) + h * bump.value((x - x0) / w); };
    s.derivative = [d, h, w, x0, bump](double x) { return d(x) + h * bump.derivative((x - x0) / w) / w; };
    for (double p : {x0 - w, x0 - 0.5 * w, x0, x0 + 0.5 * w, x0 + w}) s.breaks.push_back(p);
    sort_unique(s.breaks, 0.0);
  }
  return seq;
}

Sequence1D constant_sequence(const BvFunction1D& u, const Interval& window, int n) {
  if (!u.is_sobolev()) throw LabError(ErrorKind::NotSobolev, "constant sequences need u in W^{1,1}");
  Sequence1D seq;
  seq.generator = "constant";
  seq.mode = SeqMode::L1;
  seq.window = window;
  auto self = std::make_shared<const BvFunction1D>(u);
  Sobolev1D s{[self](double x) { return (*self)(x); }, [self](double x) { return self->derivative(x); },
              u.breakpoints()};
  for (int i = 0; i < n; ++i) seq.elements.push_back({1.0 / (i + 1), s});
  return seq;
}

SequenceStats sequence_stats(const Sequence1D& seq, const BvFunction1D& u) {
  SequenceStats st;
  const Interval& w = seq.window;
  QuadOptions q;
  q.abs_tol = 1e-8;
  for (const auto& el : seq.elements) {
    std::vector<double> brk = el.u.breaks;
    for (double p : u.breakpoints()) brk.push_back(p);
    std::sort(brk.begin(), brk.end());
    st.sup_tv = std::max(st.sup_tv, integrate([&](double x) { return std::abs(el.u.derivative(x)); }, w.lo, w.hi, brk, q).value);
    for (double x : el.u.breaks)
      if (x >= w.lo && x <= w.hi) st.sup_linf = std::max(st.sup_linf, std::abs(el.u.value(x)));
  }
  if (!seq.elements.empty()) {
    const Sobolev1D& last = seq.elements.back().u;
    std::vector<double> brk = last.breaks;
    for (double p : u.breakpoints()) brk.push_back(p);
    std::sort(brk.begin(), brk.end());
    st.final_l1 = u.integrate([&](double x) { return std::abs(last.value(x) - u(x)); }, w.lo, w.hi, brk, 1e-9).value;
  }
  return st;
}

Sequence2D smoothed_disc_sequence(const BvFunction2D& u, const std::vector<double>& eps) {
  if (u.is_smooth()) throw LabError(ErrorKind::InvalidArgument, "disc smoothing needs a piecewise constant u");
  struct D {
    Vec2 c;
    double r, dv;
  };
  std::vector<D> discs;
  for (const auto& reg : u.regions()) {
    const auto* d = std::get_if<Disc>(&reg.shape);
    if (!d) throw LabError(ErrorKind::InvalidArgument, "disc smoothing supports disc regions only");
    discs.push_back({d->center, d->radius, reg.value - u.background()});
  }
  const double c0 = u.background();
  Sequence2D seq;
  seq.generator = "smoothed_discs";
  seq.mode = SeqMode::WeakStar;
  seq.window = u.domain();
  for (double e : eps) {
    for (std::size_t i = 0; i < discs.size(); ++i)
      for (std::size_t j = i + 1; j < discs.size(); ++j)
        if ((discs[i].c - discs[j].c).norm() <= discs[i].r + discs[j].r + 2.0 * e)
          throw LabError(ErrorKind::InvalidArgument, "discs must be separated by more than 2 eps");
    Sobolev2D s;
    s.value = [discs, c0, e](const Vec2& p) {
      double v = c0;
      for (const auto& d : discs) v += d.dv * kernel().cdf((d.r - (p - d.c).norm()) / e);
      return v;
    };
    s.gradient = [discs, e](const Vec2& p) {
      Vec2 g = Vec2::Zero();
      for (const auto& d : discs) {
        const Vec2 q = p - d.c;
        const double r = q.norm();
        if (r > 0.0) g -= d.dv * kernel().rho((d.r - r) / e) / e * q / r;
      }
      return g;
    };
    for (const auto& d : discs) s.bands.push_back({d.c, std::max(0.0, d.r - e), d.r + e});
    seq.elements.push_back({e, s});
  }
  return seq;
}

Sequence2D constant_sequence(const BvFunction2D& u, const Box& window, int n) {
  if (!u.is_smooth()) throw LabError(ErrorKind::NotSobolev, "constant sequences need u in W^{1,1}");
  Sequence2D seq;
  seq.generator = "constant";
  seq.mode = SeqMode::L1;
  seq.window = window;
  const SmoothSurface surf = u.surface();
  Sobolev2D s;
  s.value = surf.value;
  s.gradient = surf.gradient;
  s.smooth_elsewhere = false;
  for (int i = 0; i < n; ++i) seq.elements.push_back({1.0 / (i + 1), s});
  return seq;
}

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

double functional_value(const Field1D& b, const Sobolev1D& v, Functional f, const Interval& a,
                        const TestFunction1D* phi, double tol) {
  std::vector<double> brk = v.breaks;
  if (phi) {
    const auto pb = phi->breakpoints();
    brk.insert(brk.end(), pb.begin(), pb.end());
    std::sort(brk.begin(), brk.end());
  }
  QuadOptions q;
  q.abs_tol = tol;
  auto g = [&](double x) {
    const double w = phi ? (*phi)(x) : 1.0;
    if (w == 0.0) return 0.0;
    return w * apply(f, b(x, v.value(x)) * v.derivative(x));
  };
  return integrate(g, a.lo, a.hi, brk, q).value;
}

double functional_value(const Field2D& b, const Sobolev2D& v, Functional f, const Box& a, const TestFunction2D* phi,
                        double tol) {
  auto g = [&](const Vec2& p) {
    const double w = phi ? (*phi)(p) : 1.0;
    if (w == 0.0) return 0.0;
    return w * apply(f, b(p, v.value(p)).dot(v.gradient(p)));
  };
  QuadOptions q;
  q.abs_tol = tol;
  if (!v.smooth_elsewhere) return integrate_area(a, g, b.singular, q).value;
  double total = 0.0;
  for (const auto& band : v.bands) {
    const Box outer{band.center - Vec2::Constant(band.r1), band.center + Vec2::Constant(band.r1)};
    if (!a.contains_open(outer.lo) || !a.contains_open(outer.hi))
      throw LabError(ErrorKind::InvalidArgument, "gradient band must lie inside the window");
    const double mid = 0.5 * (band.r0 + band.r1);
    const double rb[] = {mid};
    const double tb[] = {0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi};
    QuadOptions qb = q;
    qb.abs_tol = tol / std::max<std::size_t>(1, v.bands.size());
    total += integrate_box(
                 [&](double r, double th) { return r * g(band.center + r * Vec2(std::cos(th), std::sin(th))); },
                 band.r0, band.r1, 0.0, 2.0 * std::numbers::pi, rb, tb, qb)
                 .value;
  }
  return total;
}

double functional_target(const PairingMeasure1D& mu, Functional f, const Interval& a) {
  const RadonMeasure1D m = restrict(mu.measure, open(a));
  const double signed_mass = integrate(m, [](double) { return 1.0; }).value;
  if (f == Functional::G) return signed_mass;
  if (f == Functional::F) return total_mass(restrict(variation(mu.measure), open(a)));
  return total_mass(restrict(positive_part(mu.measure), open(a)));
}

double functional_target(const PairingMeasure2D& mu, Functional f, const Box& a) {
  const double signed_mass = integrate(restrict(mu.measure, a), [](const Vec2&) { return 1.0; }).value;
  if (f == Functional::G) return signed_mass;
  if (f == Functional::F) return total_mass(restrict(variation(mu.measure), a));
  return total_mass(restrict(positive_part(mu.measure), a));
}

// ---------------------------------------------------------------------------
// Continuity and lower semicontinuity
// ---------------------------------------------------------------------------

ContinuityTable continuity_check_Gphi(const Field1D& b, const TestFunction1D& phi, const Sequence1D& seq,
                                      const BvFunction1D& u, const PairingOptions& opt) {
  ContinuityTable tab;
  tab.mode = seq.mode;
  const SequenceStats st = sequence_stats(seq, u);
  tab.sup_linf = st.sup_linf;
  tab.sup_tv = st.sup_tv;
  const Interval sp = phi.support();
  if (sp.lo < seq.window.lo || sp.hi > seq.window.hi)
    throw LabError(ErrorKind::InvalidArgument, "the sequence window must contain the support of phi");
  // premises: sigma is sampled on the support of phi
  double sigma_max = 0.0;
  for (int i = 0; i <= 200; ++i) sigma_max = std::max(sigma_max, b.sigma(sp.lo + (sp.hi - sp.lo) * i / 200.0));
  if (seq.mode == SeqMode::LinfL1 && (!std::isfinite(sigma_max) || std::isfinite(b.t_bound)))
    throw LabError(ErrorKind::AssumptionViolation, "L1_loc continuity needs sigma bounded over all t");
  if (seq.mode != SeqMode::LinfL1 && st.sup_linf > b.t_bound)
    throw LabError(ErrorKind::AssumptionViolation, "sequence leaves the t-range where sigma is controlled");
  tab.target = pairing_distributional(b, u, phi, opt).value;
  for (const auto& el : seq.elements) {
    const double v = functional_value(b, el.u, Functional::G, sp, &phi, opt.tol * 10.0);
    tab.rows.push_back({el.parameter, v, std::abs(v - tab.target)});
  }
  return tab;
}

LscResult lsc_check(const Field1D& b, Functional f, const Sequence1D& seq, const BvFunction1D& u, const Interval& a,
                    double tolerance) {
  require_long(seq.elements.size());
  if (f == Functional::G) throw LabError(ErrorKind::InvalidArgument, "G is not lower semicontinuous; use F or G+");
  LscResult res;
  res.functional = f;
  res.truncation_k = static_cast<int>(std::floor(u.sup_abs() + 1.0)) + 1;
  res.target = functional_target(pairing_by_representation(b, u), f, a);
  for (const auto& el : seq.elements) {
    const double v = functional_value(b, el.u, f, a);
    res.rows.push_back({el.parameter, v, v - res.target});
  }
  res.liminf = tail_limit(res.rows, &res.extrapolated);
  res.margin = res.liminf - res.target;
  if (res.margin < -tolerance)
    throw LabError(ErrorKind::InequalityViolated, "liminf below the target by " + std::to_string(-res.margin));
  return res;
}

LscResult lsc_check(const Field2D& b, Functional f, const Sequence2D& seq, const BvFunction2D& u, const Box& a,
                    double tolerance) {
  require_long(seq.elements.size());
  if (f == Functional::G) throw LabError(ErrorKind::InvalidArgument, "G is not lower semicontinuous; use F or G+");
  LscResult res;
  res.functional = f;
  res.truncation_k = static_cast<int>(std::floor(u.sup_abs() + 1.0)) + 1;
  res.target = functional_target(pairing_by_representation(b, u), f, a);
  for (const auto& el : seq.elements) {
    const double v = functional_value(b, el.u, f, a);
    res.rows.push_back({el.parameter, v, v - res.target});
  }
  res.liminf = tail_limit(res.rows, &res.extrapolated);
  res.margin = res.liminf - res.target;
  if (res.margin < -tolerance)
    throw LabError(ErrorKind::InequalityViolated, "liminf below the target by " + std::to_string(-res.margin));
  return res;
}

// ---------------------------------------------------------------------------
// Truncation
// ---------------------------------------------------------------------------

Comparison truncation_consistency(const Field1D& b, int k, const BvFunction1D& v, const TestFunction1D& phi,
                                  const PairingOptions& opt) {
  const Field1D bk = truncate(b, k);
  Comparison c;
  c.lhs = pairing_distributional(bk, v, phi, opt).value;
  // T_k v enters only through its values, so integrate against v's cells
  // with extra breaks where v crosses +-k.
  std::vector<double> brk = phi.breakpoints();
  for (double level : {-static_cast<double>(k), static_cast<double>(k)}) {
    if (level <= v.min() || level >= v.max()) continue;
    try {
      for (const auto& p : level_set(v, level).boundary) brk.push_back(p.x);
    } catch (const LabError& e) {
      if (e.kind() != ErrorKind::DegenerateLevel) throw;
    }
  }
  std::sort(brk.begin(), brk.end());
  const double kk = k;
  const Interval sp = phi.support();
  const QuadResult r = v.integrate(
      [&](double x) {
        const double t = std::clamp(v(x), -kk, kk);
        return -phi(x) * bk.div_primitive(x, t) - bk.primitive(x, t) * phi.gradient(x);
      },
      sp.lo, sp.hi, brk, opt.tol);
  c.rhs = r.value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

SigmaKIdentity sigma_k_identities(const Field1D& b, int k, const BvFunction1D& v, int samples) {
  PairingOptions cyl;
  cyl.full_cylinders = true;
  const PairingMeasure1D base = pairing_by_representation(b, v, cyl);
  const PairingMeasure1D trunc = pairing_by_representation(truncate(b, k), v, cyl);
  SigmaKIdentity out;
  const Interval& d = v.domain();
  // AC samples away from the domain ends and the jumps
  for (int i = 1; i < samples; ++i) {
    const double x = d.lo + (d.hi - d.lo) * i / samples;
    if (v.derivative(x) == 0.0) continue;
    if (v.cantor() && x > v.cantor()->c0 && x < v.cantor()->c1) continue;
    const double lhs = trunc.theta_ac(x), rhs = sigma_k(k, v(x)) * base.theta_ac(x);
    out.max_diffuse = std::max(out.max_diffuse, std::abs(lhs - rhs));
    ++out.samples;
  }
  if (const auto& c = v.cantor()) {
    // midpoints of depth-5 construction intervals carry |D^c v|
    walk_ladder(c->ladder, c->c0, c->c1 - c->c0, 0, 1.0, [&](double lo, double l, int depth, double) {
      if (depth < 5) return true;
      const double x = lo + 0.5 * l;
      const double lhs = trunc.theta_cantor(x), rhs = sigma_k(k, v(x)) * base.theta_cantor(x);
      out.max_diffuse = std::max(out.max_diffuse, std::abs(lhs - rhs));
      ++out.samples;
      return false;
    });
  }
  for (std::size_t j = 0; j < v.jumps().size(); ++j) {
    const auto& jp = v.jumps()[j];
    std::vector<double> brk;
    for (double s : {-1.0 * k, 1.0 - k, k - 1.0, 1.0 * k})
      if (s > jp.u_minus && s < jp.u_plus) brk.push_back(s);
    QuadOptions q;
    q.abs_tol = 1e-12;
    const double oracle =
        integrate(
            [&](double t) { return sigma_k(k, t) * cylindrical_average(b, t, jp.nu, jp.x).value; }, jp.u_minus,
            jp.u_plus, brk, q)
            .value /
        (jp.u_plus - jp.u_minus);
    out.max_jump = std::max(out.max_jump, std::abs(trunc.theta_jump[j] - oracle));
    ++out.samples;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relaxation
// ---------------------------------------------------------------------------

RelaxationResult relaxation_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                  const Interval& a, const std::vector<double>& eps, double tolerance) {
  require_long(eps.size());
  RelaxationResult res;
  const PairingMeasure1D mu = pairing_by_representation(b, u);
  auto target_on = [&](const Interval& w) {
    return integrate(restrict(mu.measure, open(w)), [&](double x) { return phi(x); }).value;
  };
  res.target = target_on(a);
  const Sequence1D seq = mollified_sequence(u, a, eps);
  for (const auto& el : seq.elements) {
    const double v = functional_value(b, el.u, Functional::G, a, &phi);
    res.rows.push_back({el.parameter, v, std::abs(v - res.target)});
  }
  res.liminf = tail_limit(res.rows, &res.extrapolated);
  res.gap = std::abs(res.liminf - res.target);

  const Sobolev1D& finest = seq.elements.back().u;
  const double delta = 0.05 * (a.hi - a.lo);
  for (const auto& j : u.jumps()) {
    if (j.x <= a.lo || j.x >= a.hi) continue;
    const Interval w{std::max(a.lo, j.x - delta), std::min(a.hi, j.x + delta)};
    res.parts.push_back({"jump@" + std::to_string(j.x), w, functional_value(b, finest, Functional::G, w, &phi),
                         target_on(w)});
  }
  if (const auto& c = u.cantor()) {
    const Interval w{std::max(a.lo, c->c0), std::min(a.hi, c->c1)};
    if (w.hi > w.lo)
      res.parts.push_back({"cantor", w, functional_value(b, finest, Functional::G, w, &phi), target_on(w)});
  }
  if (res.gap > tolerance)
    throw LabError(ErrorKind::GapAboveTolerance, "relaxation gap " + std::to_string(res.gap));
  return res;
}

RelaxationResult relaxation_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi, const Box& a,
                                  const std::vector<double>& eps, double tolerance) {
  require_long(eps.size());
  RelaxationResult res;
  const PairingMeasure2D mu = pairing_by_representation(b, u);
  res.target = integrate(restrict(mu.measure, a), [&](const Vec2& p) { return phi(p); }).value;
  Sequence2D seq = u.is_smooth() ? constant_sequence(u, a, static_cast<int>(eps.size())) : smoothed_disc_sequence(u, eps);
  for (const auto& el : seq.elements) {
    const double v = functional_value(b, el.u, Functional::G, a, &phi);
    res.rows.push_back({el.parameter, v, std::abs(v - res.target)});
  }
  res.liminf = tail_limit(res.rows, &res.extrapolated);
  res.gap = std::abs(res.liminf - res.target);
  if (res.gap > tolerance)
    throw LabError(ErrorKind::GapAboveTolerance, "relaxation gap " + std::to_string(res.gap));
  return res;
}

// ---------------------------------------------------------------------------
// Blow-up quotients
// ---------------------------------------------------------------------------

namespace {

double distance_to_boundary(const Shape& s, const Vec2& p) {
  if (const auto* d = std::get_if<Disc>(&s)) return std::abs((p - d->center).norm() - d->radius);
  const auto& v = std::get<Polygon>(s).vertices;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i], e = v[(i + 1) % v.size()] - a;
    const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (a + t * e - p).norm());
  }
  return best;
}

void finish_blowup(BlowupTable& t) {
  std::vector<double> q, ext;
  for (const auto& r : t.rows) q.push_back(r.value);
  for (std::size_t i = 2; i < q.size(); ++i) ext.push_back(aitken(q[i - 2], q[i - 1], q[i]));
  t.limit = q.empty() ? 0.0 : q.back();
  if (ext.size() >= 2) {
    const double a = ext[ext.size() - 1], b = ext[ext.size() - 2];
    if (std::abs(a - b) <= 1e-6 * (1.0 + std::abs(a))) {
      t.limit = a;
      t.converged = true;
    } else {
      t.converged = std::abs(q.back() - q[q.size() - 2]) <= 1e-6 * (1.0 + std::abs(q.back()));
    }
  }
  for (auto& r : t.rows) r.gap = std::abs(r.value - t.theta);
}

}  // namespace

BlowupTable blowup_density(const Field1D& b, const BvFunction1D& u, double x0, double r0, int n) {
  const PairingMeasure1D mu = pairing_by_representation(b, u);
  const RadonMeasure1D du = variation(gradient_measure(u));
  BlowupTable t;
  const auto& js = u.jumps();
  const auto jit = std::find_if(js.begin(), js.end(), [&](const JumpPoint& j) { return j.x == x0; });
  const auto& c = u.cantor();
  if (jit != js.end())
    t.theta = mu.theta_jump[jit - js.begin()];
  else if (c && x0 >= c->c0 && x0 <= c->c1 && u.derivative(x0) == 0.0)
    t.theta = mu.theta_cantor(x0);
  else
    t.theta = mu.theta_ac(x0);
  for (int i = 0; i < n; ++i) {
    const double r = std::ldexp(r0, -i);
    const Interval w{x0 - r, x0 + r, false, false};
    const double num = integrate(restrict(mu.measure, w), [](double) { return 1.0; }).value;
    const double den = total_mass(restrict(du, w));
    if (den <= 0.0) throw LabError(ErrorKind::NoConvergence, "|Du| vanishes near the blow-up point");
    t.rows.push_back({r, num / den, 0.0});
  }
  finish_blowup(t);
  return t;
}

BlowupTable blowup_density(const Field2D& b, const BvFunction2D& u, const Vec2& x0, double r0, int n) {
  const PairingMeasure2D mu = pairing_by_representation(b, u);
  const RadonMeasure2D du = gradient_measure(u).variation();
  BlowupTable t;
  if (u.is_smooth()) {
    t.theta = mu.theta_ac(x0);
  } else {
    bool found = false;
    for (std::size_t i = 0; i < u.regions().size() && !found; ++i) {
      if (distance_to_boundary(u.regions()[i].shape, x0) < 1e-12) {
        t.theta = mu.theta_surface[i](x0);
        found = true;
      }
    }
    if (!found) throw LabError(ErrorKind::InvalidArgument, "blow-up point must lie on a region boundary");
  }
  for (int i = 0; i < n; ++i) {
    const double r = std::ldexp(r0, -i);
    const Box w{x0 - Vec2::Constant(r), x0 + Vec2::Constant(r)};
    const double num = integrate(restrict(mu.measure, w), [](const Vec2&) { return 1.0; }).value;
    const double den = total_mass(restrict(du, w));
    if (den <= 0.0) throw LabError(ErrorKind::NoConvergence, "|Du| vanishes near the blow-up point");
    t.rows.push_back({r, num / den, 0.0});
  }
  finish_blowup(t);
  return t;
}

}  // namespace pairlab

#include "pairlab/bv.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace pairlab {

namespace {

constexpr int kCarrierDepth = 9;

void sort_unique(std::vector<double>& v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  v.swap(out);
}

// Transition point of a predicate that is false then true on (lo, hi).
template <class P>
double transition(P&& pred, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

const GaussRule& gauss4() {
  static const GaussRule rule = gauss_legendre(4);
  return rule;
}

}  // namespace

// ---------------------------------------------------------------------------
// AC parts

AcPart ac_constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, {}};
}

AcPart ac_piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.empty())
    throw LabError(ErrorKind::InvalidArgument, "piecewise linear part needs matching non-empty node lists");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw LabError(ErrorKind::InvalidArgument, "piecewise linear nodes must increase");
  auto segment = [xs](double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    return static_cast<long>(it - xs.begin()) - 1;
  };
  AcPart p;
  p.value = [xs, ys, segment](double x) {
    const long k = segment(x);
    if (k < 0) return ys.front();
    if (k >= static_cast<long>(xs.size()) - 1) return ys.back();
    const double s = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + s * (ys[k + 1] - ys[k]);
  };
  p.derivative = [xs, ys, segment](double x) {
    const long k = segment(x);
    if (k < 0 || k >= static_cast<long>(xs.size()) - 1) return 0.0;
    return (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
  };
  p.breaks = xs;
  return p;
}

AcPart ac_sin(double amplitude, double frequency, double phase, double offset) {
  return {[=](double x) { return amplitude * std::sin(frequency * x + phase) + offset; },
          [=](double x) { return amplitude * frequency * std::cos(frequency * x + phase); },
          {}};
}

AcPart ac_poly(std::vector<double> coeffs) {
  AcPart p;
  p.value = [coeffs](double x) {
    double s = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * x + *it;
    return s;
  };
  p.derivative = [coeffs](double x) {
    double s = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) s = s * x + static_cast<double>(k) * coeffs[k];
    return s;
  };
  return p;
}

AcPart ac_tanh(double amplitude, double center, double width, double offset) {
  if (!(width > 0.0)) throw LabError(ErrorKind::InvalidArgument, "tanh width must be positive");
  return {[=](double x) { return amplitude * std::tanh((x - center) / width) + offset; },
          [=](double x) {
            const double th = std::tanh((x - center) / width);
            return amplitude * (1.0 - th * th) / width;
          },
          {}};
}

AcPart ac_sum(const std::vector<AcPart>& parts) {
  AcPart p;
  p.value = [parts](double x) {
    double s = 0.0;
    for (const auto& q : parts) s += q.value(x);
    return s;
  };
  p.derivative = [parts](double x) {
    double s = 0.0;
    for (const auto& q : parts) s += q.derivative(x);
    return s;
  };
  for (const auto& q : parts) p.breaks.insert(p.breaks.end(), q.breaks.begin(), q.breaks.end());
  std::sort(p.breaks.begin(), p.breaks.end());
  return p;
}

// ---------------------------------------------------------------------------
// 1D sets

bool FinitePerimeterSet1D::contains(double x) const {
  for (const auto& c : components)
    if (c.contains(x)) return true;
  return false;
}

std::optional<BoundaryPoint1D> FinitePerimeterSet1D::nearest(double x, double radius) const {
  std::optional<BoundaryPoint1D> best;
  double best_d = radius;
  for (const auto& b : boundary) {
    const double d = std::abs(b.x - x);
    if (d <= best_d) {
      best_d = d;
      best = b;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// BvFunction1D

BvFunction1D::BvFunction1D(Interval domain, AcPart ac, std::vector<JumpPoint> jumps, std::optional<CantorPart> cantor)
    : domain_(domain), ac_(std::move(ac)), jumps_(std::move(jumps)), cantor_(std::move(cantor)) {
  const double a = domain_.lo, b = domain_.hi;
  if (!(b > a)) throw LabError(ErrorKind::InvalidArgument, "BV domain must be a non-empty interval");
  if (!ac_.value || !ac_.derivative) throw LabError(ErrorKind::InvalidArgument, "AC part needs value and derivative");
  const double L = b - a;
  const double eps = 1e-13 * L;

  for (auto& j : jumps_) {
    if (j.nu != 1 && j.nu != -1) throw LabError(ErrorKind::InvalidArgument, "jump orientation must be +1 or -1");
    if (j.u_plus == j.u_minus) throw LabError(ErrorKind::InvalidArgument, "degenerate jump with equal traces");
    if (j.u_plus < j.u_minus) {
      std::swap(j.u_plus, j.u_minus);
      j.nu = -j.nu;
    }
    if (!(j.x > a && j.x < b)) throw LabError(ErrorKind::InvalidArgument, "jump point must be interior");
  }
  std::sort(jumps_.begin(), jumps_.end(), [](const JumpPoint& p, const JumpPoint& q) { return p.x < q.x; });
  for (std::size_t i = 1; i < jumps_.size(); ++i)
    if (!(jumps_[i].x > jumps_[i - 1].x)) throw LabError(ErrorKind::InvalidArgument, "jump points must be distinct");

  if (cantor_) {
    cantor_->ladder.validate();
    if (!(cantor_->c1 > cantor_->c0) || cantor_->c0 < a || cantor_->c1 > b)
      throw LabError(ErrorKind::InvalidArgument, "Cantor carrier must be a subinterval of the domain");
    if (cantor_->scale == 0.0) throw LabError(ErrorKind::InvalidArgument, "Cantor scale must be non-zero");
  }

  for (const auto& j : jumps_) {
    const double left = left_limit(j.x);
    const double expected = j.nu > 0 ? j.u_minus : j.u_plus;
    if (std::abs(left - expected) > 1e-9 * (1.0 + std::abs(expected)))
      throw LabError(ErrorKind::InvalidArgument, "jump at x = " + std::to_string(j.x) +
                                                     " inconsistent with the left limit " + std::to_string(left));
  }

  // Cell points: domain ends, kinks, jumps, carrier ends and critical points.
  std::vector<double> pts{a, b};
  for (double x : ac_.breaks)
    if (x > a && x < b) pts.push_back(x);
  for (const auto& j : jumps_) pts.push_back(j.x);
  if (cantor_) {
    if (cantor_->c0 > a) pts.push_back(cantor_->c0);
    if (cantor_->c1 < b) pts.push_back(cantor_->c1);
  }
  {
    std::vector<double> samples = pts;
    constexpr int n = 4096;
    for (int i = 1; i < n; ++i) samples.push_back(a + L * i / n);
    sort_unique(samples, 0.0);
    double last_x = samples.front();
    double last_d = ac_.derivative(std::min(b, last_x + eps));
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double x = samples[i] == b ? b - eps : samples[i];
      const double d = ac_.derivative(x);
      if (d == 0.0) continue;
      if (last_d != 0.0 && (d > 0.0) != (last_d > 0.0)) {
        const bool up = d > 0.0;
        pts.push_back(transition([&](double s) { return (ac_.derivative(s) > 0.0) == up; }, last_x, x));
      }
      last_x = x;
      last_d = d;
    }
  }
  sort_unique(pts, eps);
  pts.front() = a;
  pts.back() = b;
  cells_ = pts;

  if (cantor_) {
    for (std::size_t i = 0; i + 1 < cells_.size(); ++i) {
      const double l = cells_[i], r = cells_[i + 1];
      if (r <= cantor_->c0 || l >= cantor_->c1) continue;
      for (int k = 1; k < 16; ++k) {
        const double d = ac_.derivative(l + (r - l) * k / 16.0);
        if (d * cantor_->scale < -1e-14)
          throw LabError(ErrorKind::InvalidArgument, "u must be monotone on each cell of the Cantor carrier");
      }
    }
  }

  min_ = std::numeric_limits<double>::infinity();
  max_ = -min_;
  for (std::size_t i = 0; i + 1 < cells_.size(); ++i) {
    for (double v : {right_limit(cells_[i]), left_limit(cells_[i + 1])}) {
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
    }
  }
  if (!std::isfinite(min_) || !std::isfinite(max_)) throw LabError(ErrorKind::NonFiniteValue, "u is not bounded");

  if (cantor_) {
    for (auto [left, len] : cantor_->ladder.intervals(level_depth())) {
      const double x0 = cantor_->map(left), x1 = cantor_->map(left + len);
      const double t0 = right_limit(x0), t1 = left_limit(x1);
      fine_levels_.emplace_back(std::min(t0, t1), std::max(t0, t1));
    }
    std::sort(fine_levels_.begin(), fine_levels_.end());
  }
}

double BvFunction1D::jump_sum(double x, bool inclusive) const {
  double s = 0.0;
  for (const auto& j : jumps_) {
    if (j.x < x || (inclusive && j.x == x))
      s += j.size();
    else
      break;
  }
  return s;
}

BvFunction1D BvFunction1D::with_jump_sizes(Interval domain, AcPart ac, std::vector<std::pair<double, double>> sizes,
                                           std::optional<CantorPart> cantor) {
  std::sort(sizes.begin(), sizes.end());
  std::vector<JumpPoint> jumps;
  double before = 0.0;
  for (const auto& [x, size] : sizes) {
    if (!ac.value) throw LabError(ErrorKind::InvalidArgument, "absolutely continuous part is missing");
    const double left = ac.value(x) + before + (cantor ? cantor->value(x) : 0.0);
    jumps.push_back({x, left, left + size, 1});
    before += size;
  }
  return BvFunction1D(domain, std::move(ac), std::move(jumps), std::move(cantor));
}

double BvFunction1D::left_limit(double x) const { return ac_.value(x) + jump_sum(x, false) + cantor_value(x); }
double BvFunction1D::right_limit(double x) const { return ac_.value(x) + jump_sum(x, true) + cantor_value(x); }

std::vector<double> BvFunction1D::breakpoints() const { return {cells_.begin() + 1, cells_.end() - 1}; }

std::pair<double, double> BvFunction1D::range_on(double lo, double hi) const {
  lo = std::max(lo, domain_.lo);
  hi = std::min(hi, domain_.hi);
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (std::size_t i = 0; i + 1 < cells_.size(); ++i) {
    const double l = cells_[i], r = cells_[i + 1];
    if (l > hi || r < lo) continue;
    const double pl = std::max(l, lo), pr = std::min(r, hi);
    for (double v : {pl == l ? right_limit(l) : (*this)(pl), pr == r ? left_limit(r) : (*this)(pr)}) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  return {mn, mx};
}

QuadResult BvFunction1D::integrate(const Scalar1D& f, double lo, double hi, std::span<const double> extra,
                                   double tol) const {
  lo = std::max(lo, domain_.lo);
  hi = std::min(hi, domain_.hi);
  QuadResult total;
  if (!(hi > lo)) return total;
  std::vector<double> breaks = breakpoints();
  breaks.insert(breaks.end(), extra.begin(), extra.end());
  std::sort(breaks.begin(), breaks.end());
  QuadOptions opt;
  opt.abs_tol = tol;
  if (!cantor_ || cantor_->c1 <= lo || cantor_->c0 >= hi) return pairlab::integrate(f, lo, hi, breaks, opt);

  CompensatedSum sum;
  const double width = hi - lo;
  auto smooth_piece = [&](double a, double b) {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (!(b > a)) return;
    QuadOptions local = opt;
    local.abs_tol = tol * (b - a) / width;
    QuadResult r = pairlab::integrate(f, a, b, breaks, local);
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  };
  smooth_piece(lo, cantor_->c0);
  smooth_piece(cantor_->c1, hi);
  const int d = std::min(cantor_->ladder.depth, kCarrierDepth);
  for (auto [g0, g1] : cantor_->ladder.gaps(d)) smooth_piece(cantor_->map(g0), cantor_->map(g1));
  for (auto [left, len] : cantor_->ladder.intervals(d)) {
    const double x0 = std::max(lo, cantor_->map(left)), x1 = std::min(hi, cantor_->map(left + len));
    if (!(x1 > x0)) continue;
    double a = x0;
    auto it = std::upper_bound(breaks.begin(), breaks.end(), x0);
    for (; it != breaks.end() && *it < x1; ++it) {
      sum.add((*it - a) * f(0.5 * (a + *it)));
      a = *it;
    }
    sum.add((x1 - a) * f(0.5 * (a + x1)));
  }
  total.value = sum.value();
  return total;
}

AcIntegrator BvFunction1D::integrator(std::vector<double> extra_breaks) const {
  auto self = std::make_shared<const BvFunction1D>(*this);
  return [self, extra = std::move(extra_breaks)](const Scalar1D& f, double lo, double hi, double tol) {
    return self->integrate(f, lo, hi, extra, tol);
  };
}

int BvFunction1D::level_depth() const { return cantor_ ? std::min(cantor_->ladder.depth, kCarrierDepth) : 0; }

std::vector<double> BvFunction1D::level_breaks() const {
  std::vector<double> t;
  for (std::size_t i = 0; i + 1 < cells_.size(); ++i) {
    t.push_back(right_limit(cells_[i]));
    t.push_back(left_limit(cells_[i + 1]));
  }
  for (auto [t0, t1] : fine_levels_) {
    t.push_back(t0);
    t.push_back(t1);
  }
  sort_unique(t, 0.0);
  return t;
}

RadonMeasure1D gradient_measure(const BvFunction1D& u) {
  RadonMeasure1D m;
  m.domain = {u.domain().lo, u.domain().hi, true, true};
  m.ac = u.ac().derivative;
  m.ac_breaks = u.breakpoints();
  for (const auto& j : u.jumps()) m.atoms.push_back({j.x, j.size()});
  if (const auto& c = u.cantor()) m.ladder = LadderPart{c->ladder, c->c0, c->c1, c->scale, {}};
  return m;
}

FinitePerimeterSet1D level_set(const BvFunction1D& u, double t) {
  const auto& cells = u.cells();
  const double a = cells.front(), b = cells.back();
  const double L = b - a;
  const double flat = 1e-12 * L;
  // near a smooth extremum at level t, roundoff makes u == t over a width ~ sqrt(eps)
  const double crit = 1e-7 * L;
  std::vector<Interval> pieces;
  auto degenerate = [&]() {
    throw LabError(ErrorKind::DegenerateLevel, "u is constant equal to t = " + std::to_string(t) +
                                                   " on a set of positive measure");
  };
  for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
    const double l = cells[i], r = cells[i + 1];
    const double fl = u.right_limit(l), fr = u.left_limit(r);
    if (fl == fr) {
      if (fl == t && r - l > flat) degenerate();
      if (fl > t) pieces.push_back({l, r, false, false});
      continue;
    }
    if (fr > fl) {
      if (t < fl) {
        pieces.push_back({l, r, false, false});
      } else if (t <= fr) {
        const double above = transition([&](double x) { return u(x) > t; }, l, r);
        const double at = transition([&](double x) { return u(x) >= t; }, l, r);
        if (above - at > crit) degenerate();
        if (above < r) pieces.push_back({above, r, false, false});
      }
    } else {
      if (t < fr) {
        pieces.push_back({l, r, false, false});
      } else if (t <= fl) {
        const double below = transition([&](double x) { return u(x) <= t; }, l, r);
        const double strict = transition([&](double x) { return u(x) < t; }, l, r);
        if (strict - below > crit) degenerate();
        if (below > l) pieces.push_back({l, below, false, false});
      }
    }
  }
  FinitePerimeterSet1D set;
  const double join = 1e-13 * L;
  for (const auto& p : pieces) {
    if (!(p.hi > p.lo)) continue;
    if (!set.components.empty() && p.lo - set.components.back().hi <= join)
      set.components.back().hi = p.hi;
    else
      set.components.push_back(p);
  }
  for (const auto& c : set.components) {
    if (c.lo > a + join) set.boundary.push_back({c.lo, 1.0});
    if (c.hi < b - join) set.boundary.push_back({c.hi, -1.0});
  }
  return set;
}

PreciseValue precise_values(const BvFunction1D& u, double x) {
  PreciseValue p;
  const double tol = 1e-12 * u.domain().length();
  for (const auto& j : u.jumps()) {
    if (std::abs(j.x - x) <= tol) {
      p.jump = true;
      p.u_minus = j.u_minus;
      p.u_plus = j.u_plus;
      p.nu = j.nu;
      p.u_star = 0.5 * (j.u_minus + j.u_plus);
      p.u_tilde = p.u_star;
      return p;
    }
  }
  p.u_tilde = p.u_star = u(x);
  return p;
}

QuadResult integrate_levels(const BvFunction1D& u, const Scalar1D& h, double tol) {
  QuadResult total;
  const double lo = u.min(), hi = u.max();
  if (!(hi > lo)) return total;
  std::vector<double> pts{lo, hi};
  for (double t : u.level_breaks())
    if (t > lo && t < hi) pts.push_back(t);
  sort_unique(pts, 0.0);
  const auto& fine = u.fine_levels();
  auto is_fine = [&](double a, double b) {
    auto it = std::upper_bound(fine.begin(), fine.end(), std::make_pair(a, std::numeric_limits<double>::infinity()));
    if (it == fine.begin()) return false;
    --it;
    return it->first <= a && it->second >= b;
  };
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    if (is_fine(a, b)) {
      sum.add(integrate_fixed(h, a, b, gauss4()));
      continue;
    }
    QuadOptions opt;
    opt.abs_tol = tol * (b - a) / (hi - lo);
    QuadResult r = integrate(h, a, b, opt);
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  }
  total.value = sum.value();
  return total;
}

Comparison coarea_tv_check(const BvFunction1D& u, const Scalar1D& g, double tol) {
  Comparison c;
  RadonMeasure1D tv = variation(gradient_measure(u));
  c.lhs = integrate(tv, g, {tol}).value;
  c.rhs = integrate_levels(
              u,
              [&](double t) {
                double s = 0.0;
                for (const auto& p : level_set(u, t).boundary) s += g(p.x);
                return s;
              },
              tol)
              .value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

// ---------------------------------------------------------------------------
// Smooth surfaces

SmoothSurface grid_surface(std::vector<double> xs, std::vector<double> ys, std::vector<double> values) {
  const std::size_t nx = xs.size(), ny = ys.size();
  if (nx < 2 || ny < 2 || values.size() != nx * ny)
    throw LabError(ErrorKind::InvalidArgument, "grid surface needs at least 2x2 nodes and nx*ny values");
  for (std::size_t i = 1; i < nx; ++i)
    if (!(xs[i] > xs[i - 1])) throw LabError(ErrorKind::InvalidArgument, "grid x nodes must increase");
  for (std::size_t j = 1; j < ny; ++j)
    if (!(ys[j] > ys[j - 1])) throw LabError(ErrorKind::InvalidArgument, "grid y nodes must increase");
  auto slope = [](const std::vector<double>& x, const std::vector<double>& v, std::size_t i) {
    const std::size_t n = x.size();
    if (i == 0) return (v[1] - v[0]) / (x[1] - x[0]);
    if (i == n - 1) return (v[n - 1] - v[n - 2]) / (x[n - 1] - x[n - 2]);
    return (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1]);
  };
  Eigen::MatrixXd F(nx, ny), Fx(nx, ny), Fy(nx, ny), Fxy(nx, ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) F(i, j) = values[j * nx + i];
  for (std::size_t j = 0; j < ny; ++j) {
    std::vector<double> row(nx);
    for (std::size_t i = 0; i < nx; ++i) row[i] = F(i, j);
    for (std::size_t i = 0; i < nx; ++i) Fx(i, j) = slope(xs, row, i);
  }
  for (std::size_t i = 0; i < nx; ++i) {
    std::vector<double> col(ny), colx(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      col[j] = F(i, j);
      colx[j] = Fx(i, j);
    }
    for (std::size_t j = 0; j < ny; ++j) {
      Fy(i, j) = slope(ys, col, j);
      Fxy(i, j) = slope(ys, colx, j);
    }
  }
  struct Data {
    std::vector<double> xs, ys;
    Eigen::MatrixXd F, Fx, Fy, Fxy;
  };
  auto data = std::make_shared<const Data>(Data{xs, ys, F, Fx, Fy, Fxy});
  // Value and gradient of the Hermite patch containing p (clamped to the grid).
  auto eval = [data](const Vec2& p, Vec2* grad) {
    const auto& X = data->xs;
    const auto& Y = data->ys;
    const double x = std::clamp(p.x(), X.front(), X.back());
    const double y = std::clamp(p.y(), Y.front(), Y.back());
    std::size_t i = std::min<std::size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin(), X.size() - 1);
    std::size_t j = std::min<std::size_t>(std::upper_bound(Y.begin(), Y.end(), y) - Y.begin(), Y.size() - 1);
    i = std::max<std::size_t>(i, 1) - 1;
    j = std::max<std::size_t>(j, 1) - 1;
    const double hx = X[i + 1] - X[i], hy = Y[j + 1] - Y[j];
    const double s = (x - X[i]) / hx, q = (y - Y[j]) / hy;
    auto basis = [](double z, double out[4], double dout[4]) {
      const double z2 = z * z, z3 = z2 * z;
      out[0] = 2 * z3 - 3 * z2 + 1;  // value at 0
      out[1] = -2 * z3 + 3 * z2;     // value at 1
      out[2] = z3 - 2 * z2 + z;      // slope at 0
      out[3] = z3 - z2;              // slope at 1
      dout[0] = 6 * z2 - 6 * z;
      dout[1] = -6 * z2 + 6 * z;
      dout[2] = 3 * z2 - 4 * z + 1;
      dout[3] = 3 * z2 - 2 * z;
    };
    double bs[4], dbs[4], bq[4], dbq[4];
    basis(s, bs, dbs);
    basis(q, bq, dbq);
    double v = 0.0, gx = 0.0, gy = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int c = 0; c < 2; ++c) {
        const std::size_t ii = i + a, jj = j + c;
        const double terms[4] = {data->F(ii, jj), hx * data->Fx(ii, jj), hy * data->Fy(ii, jj),
                                 hx * hy * data->Fxy(ii, jj)};
        const double sx[2] = {bs[a], bs[2 + a]}, dsx[2] = {dbs[a], dbs[2 + a]};
        const double sy[2] = {bq[c], bq[2 + c]}, dsy[2] = {dbq[c], dbq[2 + c]};
        for (int m = 0; m < 2; ++m) {
          for (int n = 0; n < 2; ++n) {
            const double coef = terms[m + 2 * n];
            v += coef * sx[m] * sy[n];
            gx += coef * dsx[m] * sy[n];
            gy += coef * sx[m] * dsy[n];
          }
        }
      }
    }
    if (grad) {
      *grad = Vec2(p.x() == x ? gx / hx : 0.0, p.y() == y ? gy / hy : 0.0);
    }
    return v;
  };
  SmoothSurface s;
  s.value = [eval](const Vec2& p) { return eval(p, nullptr); };
  s.gradient = [eval](const Vec2& p) {
    Vec2 g;
    eval(p, &g);
    return g;
  };
  s.xbreaks = std::move(xs);
  s.ybreaks = std::move(ys);
  return s;
}

SmoothSurface gaussian_surface(const Vec2& center, double width, double amplitude, double offset) {
  if (!(width > 0.0)) throw LabError(ErrorKind::InvalidArgument, "gaussian width must be positive");
  SmoothSurface s;
  const double k = 0.5 / (width * width);
  s.value = [=](const Vec2& p) { return amplitude * std::exp(-k * (p - center).squaredNorm()) + offset; };
  s.gradient = [=](const Vec2& p) {
    const Vec2 d = p - center;
    return Vec2(-2.0 * k * amplitude * std::exp(-k * d.squaredNorm()) * d);
  };
  return s;
}

// ---------------------------------------------------------------------------
// 2D sets and functions

bool FinitePerimeterSet2D::contains(const Vec2& p) const {
  if (implicit) return implicit->g(p) > implicit->t;
  for (const auto& [shape, in] : shapes)
    if (pairlab::contains(shape, p)) return in;
  return background_in;
}

double FinitePerimeterSet2D::perimeter(const QuadOptions& opt) const {
  if (implicit) return integrate_boundary(*implicit, [](const Vec2&, const Vec2&) { return 1.0; }, opt).value;
  double s = 0.0;
  for (const auto& p : pieces) s += pairlab::perimeter(p.shape);
  return s;
}

namespace {

// Extremum of a smooth function over a box: dense sampling then a shrinking
// pattern search from the best sample.
double box_extremum(const Scalar2D& f, const Box& box, double sign) {
  constexpr int n = 160;
  const Vec2 h = (box.hi - box.lo) / n;
  Vec2 best = box.lo;
  double fb = sign * f(best);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Vec2 p = box.lo + Vec2(i * h.x(), j * h.y());
      const double v = sign * f(p);
      if (v > fb) {
        fb = v;
        best = p;
      }
    }
  }
  Vec2 step = h;
  for (int it = 0; it < 200 && step.norm() > 1e-14 * (box.hi - box.lo).norm(); ++it) {
    bool moved = false;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        const Vec2 p = (best + Vec2(dx * step.x(), dy * step.y())).cwiseMax(box.lo).cwiseMin(box.hi);
        const double v = sign * f(p);
        if (v > fb) {
          fb = v;
          best = p;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return sign * fb;
}

// Interior local extrema of f: strict extrema of a sampling grid refined by
// pattern search.
std::vector<Vec2> local_extrema(const Scalar2D& f, const Box& box) {
  constexpr int n = 80;
  const Vec2 h = (box.hi - box.lo) / n;
  std::vector<double> v((n + 1) * (n + 1));
  auto at = [&](int i, int j) -> Vec2 { return box.lo + Vec2(i * h.x(), j * h.y()); };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) v[i * (n + 1) + j] = f(at(i, j));
  std::vector<Vec2> out;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double c = v[i * (n + 1) + j];
      bool is_max = true, is_min = true;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di == 0 && dj == 0) || i + di < 0 || i + di > n || j + dj < 0 || j + dj > n) continue;
          const double w = v[(i + di) * (n + 1) + j + dj];
          if (w >= c) is_max = false;
          if (w <= c) is_min = false;
        }
      }
      if (!is_max && !is_min) continue;
      const double sign = is_max ? 1.0 : -1.0;
      Box local{(at(i, j) - h).cwiseMax(box.lo), (at(i, j) + h).cwiseMin(box.hi)};
      Vec2 best = at(i, j);
      double fb = sign * c;
      Vec2 step = 0.5 * h;
      for (int it = 0; it < 200 && step.norm() > 1e-14 * (box.hi - box.lo).norm(); ++it) {
        bool moved = false;
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            const Vec2 p = (best + Vec2(dx * step.x(), dy * step.y())).cwiseMax(local.lo).cwiseMin(local.hi);
            const double w = sign * f(p);
            if (w > fb) {
              fb = w;
              best = p;
              moved = true;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      out.push_back(best);
    }
  }
  return out;
}

// Values of f at local extrema of its restriction to the edges of the box.
std::vector<double> edge_critical_values(const Scalar2D& f, const Box& box) {
  std::vector<double> out;
  const Vec2 corners[4] = {box.lo, Vec2(box.hi.x(), box.lo.y()), box.hi, Vec2(box.lo.x(), box.hi.y())};
  constexpr int n = 400;
  for (int e = 0; e < 4; ++e) {
    const Vec2 a = corners[e], b = corners[(e + 1) % 4];
    auto h = [&](double s) { return f(a + s * (b - a)); };
    std::vector<double> v(n + 1);
    for (int i = 0; i <= n; ++i) v[i] = h(static_cast<double>(i) / n);
    out.push_back(v[0]);
    for (int i = 1; i < n; ++i) {
      const double sign = v[i] > v[i - 1] && v[i] >= v[i + 1] ? 1.0 : (v[i] < v[i - 1] && v[i] <= v[i + 1] ? -1.0 : 0.0);
      if (sign == 0.0) continue;
      double lo = static_cast<double>(i - 1) / n, hi = static_cast<double>(i + 1) / n;
      constexpr double g = 0.6180339887498949;
      for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
        if (sign * h(c) > sign * h(d))
          hi = d;
        else
          lo = c;
      }
      out.push_back(h(0.5 * (lo + hi)));
    }
  }
  return out;
}

}  // namespace

BvFunction2D BvFunction2D::smooth(Box domain, SmoothSurface s) {
  if (!(domain.area() > 0.0)) throw LabError(ErrorKind::InvalidArgument, "BV domain must have positive area");
  if (!s.value || !s.gradient) throw LabError(ErrorKind::InvalidArgument, "smooth surface needs value and gradient");
  BvFunction2D u;
  u.domain_ = domain;
  u.min_ = box_extremum(s.value, domain, -1.0);
  u.max_ = box_extremum(s.value, domain, 1.0);
  u.extrema_ = local_extrema(s.value, domain);
  u.critical_values_ = edge_critical_values(s.value, domain);
  for (const Vec2& e : u.extrema_) u.critical_values_.push_back(s.value(e));
  sort_unique(u.critical_values_, 1e-13 * (u.max_ - u.min_));
  u.smooth_ = std::move(s);
  return u;
}

BvFunction2D BvFunction2D::piecewise_constant(Box domain, double background, std::vector<Region> regions) {
  if (!(domain.area() > 0.0)) throw LabError(ErrorKind::InvalidArgument, "BV domain must have positive area");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Box bb = bounding_box(regions[i].shape);
    if (!(area(regions[i].shape) > 0.0)) throw LabError(ErrorKind::InvalidArgument, "region with zero area");
    if (!domain.contains_open(bb.lo) || !domain.contains_open(bb.hi))
      throw LabError(ErrorKind::InvalidArgument, "region closure must lie inside the domain");
    if (regions[i].value == background)
      throw LabError(ErrorKind::InvalidArgument, "region value equals the background value");
    const Curve c = boundary(regions[i].shape);
    const double L = length(c);
    for (std::size_t k = 0; k < regions.size(); ++k) {
      if (k == i) continue;
      for (int m = 0; m < 256; ++m) {
        Vec2 p;
        if (const auto* arc = std::get_if<CircleArc>(&c)) {
          p = arc->at(arc->theta0 + (arc->theta1 - arc->theta0) * m / 256.0);
        } else {
          // walk the closed polyline by arclength
          const auto& pts = std::get<Polyline>(c).points;
          double s = L * m / 256.0;
          p = pts.front();
          for (std::size_t e = 0; e < pts.size(); ++e) {
            const Vec2 a = pts[e], b = pts[(e + 1) % pts.size()];
            const double len = (b - a).norm();
            if (s <= len) {
              p = a + (s / len) * (b - a);
              break;
            }
            s -= len;
          }
        }
        if (contains(regions[k].shape, p))
          throw LabError(ErrorKind::InvalidArgument, "regions of a piecewise constant function must be disjoint");
      }
    }
  }
  BvFunction2D u;
  u.domain_ = domain;
  u.background_ = background;
  u.regions_ = std::move(regions);
  u.min_ = u.max_ = background;
  for (const auto& r : u.regions_) {
    u.min_ = std::min(u.min_, r.value);
    u.max_ = std::max(u.max_, r.value);
  }
  return u;
}

double BvFunction2D::operator()(const Vec2& p) const {
  if (smooth_) return smooth_->value(p);
  for (const auto& r : regions_)
    if (contains(r.shape, p)) return r.value;
  return background_;
}

std::pair<double, double> BvFunction2D::range_on(const Box& b) const {
  if (smooth_) return {min_, max_};
  double mn = background_, mx = background_;
  for (const auto& r : regions_) {
    if (!intersect(bounding_box(r.shape), b)) continue;
    mn = std::min(mn, r.value);
    mx = std::max(mx, r.value);
  }
  return {mn, mx};
}

std::vector<double> BvFunction2D::level_breaks() const {
  std::vector<double> t;
  if (smooth_) return critical_values_;
  t.push_back(background_);
  for (const auto& r : regions_) t.push_back(r.value);
  sort_unique(t, 0.0);
  return t;
}

RadonMeasure2D GradientMeasure2D::component(int i) const {
  RadonMeasure2D m;
  m.domain = domain;
  if (ac) {
    Vector2D g = ac;
    m.ac = [g, i](const Vec2& p) { return g(p)[i]; };
    m.ac_xbreaks = xbreaks;
    m.ac_ybreaks = ybreaks;
  }
  for (const auto& s : surfaces) {
    const Shape shape = s.shape;
    const double w = s.weight;
    m.surfaces.push_back({boundary(shape), [shape, w, i](const Vec2& p) { return w * interior_normal(shape, p)[i]; }});
  }
  return m;
}

RadonMeasure2D GradientMeasure2D::variation() const {
  RadonMeasure2D m;
  m.domain = domain;
  if (ac) {
    Vector2D g = ac;
    m.ac = [g](const Vec2& p) { return g(p).norm(); };
    m.ac_xbreaks = xbreaks;
    m.ac_ybreaks = ybreaks;
  }
  for (const auto& s : surfaces) {
    const double w = std::abs(s.weight);
    m.surfaces.push_back({boundary(s.shape), [w](const Vec2&) { return w; }});
  }
  return m;
}

GradientMeasure2D gradient_measure(const BvFunction2D& u) {
  GradientMeasure2D m;
  m.domain = u.domain();
  if (u.is_smooth()) {
    m.ac = u.surface().gradient;
    m.xbreaks = u.surface().xbreaks;
    m.ybreaks = u.surface().ybreaks;
    return m;
  }
  for (const auto& r : u.regions()) m.surfaces.push_back({r.shape, r.value - u.background()});
  return m;
}

FinitePerimeterSet2D level_set(const BvFunction2D& u, double t) {
  FinitePerimeterSet2D set;
  set.domain = u.domain();
  if (u.is_smooth()) {
    const auto& s = u.surface();
    set.implicit = LevelRegion{s.value, s.gradient, t, u.domain(), s.xbreaks, s.ybreaks, u.extrema()};
    return set;
  }
  if (t == u.background())
    throw LabError(ErrorKind::DegenerateLevel, "t equals the background value of a piecewise constant function");
  set.background_in = u.background() > t;
  for (std::size_t i = 0; i < u.regions().size(); ++i) {
    const auto& r = u.regions()[i];
    if (t == r.value) throw LabError(ErrorKind::DegenerateLevel, "t equals a region value");
    const bool in = r.value > t;
    set.shapes.emplace_back(r.shape, in);
    if (in != set.background_in) set.pieces.push_back({r.shape, in ? 1.0 : -1.0, static_cast<int>(i)});
  }
  return set;
}

PreciseValue precise_values(const BvFunction2D& u, const Vec2& x) {
  PreciseValue p;
  if (!u.is_smooth()) {
    for (const auto& r : u.regions()) {
      const Curve c = boundary(r.shape);
      const double d = std::get_if<CircleArc>(&c)
                           ? std::abs((x - std::get<Disc>(r.shape).center).norm() - std::get<Disc>(r.shape).radius)
                           : std::numeric_limits<double>::infinity();
      bool on_edge = d <= 1e-12;
      if (!on_edge && std::holds_alternative<Polygon>(r.shape)) {
        const auto& v = std::get<Polygon>(r.shape).vertices;
        for (std::size_t k = 0; k < v.size() && !on_edge; ++k) {
          const Vec2 a = v[k], b = v[(k + 1) % v.size()];
          const double len2 = (b - a).squaredNorm();
          const double s = std::clamp((x - a).dot(b - a) / len2, 0.0, 1.0);
          on_edge = (x - (a + s * (b - a))).norm() <= 1e-12;
        }
      }
      if (on_edge) {
        p.jump = true;
        p.u_minus = std::min(r.value, u.background());
        p.u_plus = std::max(r.value, u.background());
        p.nu = 1;
        p.u_star = p.u_tilde = 0.5 * (p.u_minus + p.u_plus);
        return p;
      }
    }
  }
  p.u_tilde = p.u_star = u(x);
  return p;
}

QuadResult integrate_piecewise(const BvFunction2D& u, const std::function<double(const Vec2&, double)>& f,
                               const Box& w, const std::optional<Vec2>& singular, double tol) {
  QuadOptions opt;
  opt.abs_tol = tol;
  if (u.is_smooth()) {
    const auto& s = u.surface();
    return integrate_area(
        w, [&](const Vec2& p) { return f(p, s.value(p)); }, singular, opt, s.xbreaks, s.ybreaks);
  }
  const double c0 = u.background();
  const std::size_t n = u.regions().size();
  QuadOptions part = opt;
  part.abs_tol = tol / (2.0 * std::max<std::size_t>(n, 1));
  QuadOptions base = opt;
  base.abs_tol = 0.5 * tol;
  QuadResult total = integrate_area(w, [&](const Vec2& p) { return f(p, c0); }, singular, base);
  CompensatedSum sum;
  sum.add(total.value);
  total.value = 0.0;
  for (const auto& r : u.regions()) {
    if (!intersect(bounding_box(r.shape), w)) continue;
    const double v = r.value;
    QuadResult q = integrate_area(
        r.shape, [&](const Vec2& p) { return f(p, v) - f(p, c0); }, singular, part);
    sum.add(q.value);
    q.value = 0.0;
    total += q;
  }
  total.value = sum.value();
  return total;
}

QuadResult integrate_levels(const BvFunction2D& u, const Scalar1D& h, double tol) {
  const double lo = u.min(), hi = u.max();
  if (!(hi > lo)) return {};
  std::vector<double> breaks = u.level_breaks();
  QuadOptions opt;
  opt.abs_tol = tol;
  if (!u.is_smooth()) return integrate(h, lo, hi, breaks, opt);
  // Level lengths behave like sqrt(t - t_c) next to critical values; the
  // substitution t = a + (b - a)(3s^2 - 2s^3) on each piece removes that.
  breaks.insert(breaks.begin(), lo);
  breaks.push_back(hi);
  sort_unique(breaks, 0.0);
  QuadResult total;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], lo), b = std::min(breaks[i + 1], hi);
    if (!(b > a)) continue;
    QuadOptions piece = opt;
    piece.abs_tol = tol * (b - a) / (hi - lo);
    total += integrate([&](double s) { return h(a + (b - a) * s * s * (3.0 - 2.0 * s)) * (b - a) * 6.0 * s * (1.0 - s); },
                       0.0, 1.0, piece);
  }
  return total;
}

Comparison coarea_tv_check(const BvFunction2D& u, const Scalar2D& g, double tol) {
  Comparison c;
  const RadonMeasure2D tv = gradient_measure(u).variation();
  c.lhs = integrate(tv, g, {tol}).value;
  const double span = std::max(u.max() - u.min(), 1e-300);
  c.rhs = integrate_levels(
              u,
              [&](double t) {
                const FinitePerimeterSet2D e = level_set(u, t);
                QuadOptions inner;
                inner.abs_tol = 0.25 * tol / span;
                if (e.implicit)
                  return integrate_boundary(*e.implicit, [&](const Vec2& p, const Vec2&) { return g(p); }, inner).value;
                double s = 0.0;
                for (const auto& piece : e.pieces) s += integrate_curve(boundary(piece.shape), g, std::nullopt, inner).value;
                return s;
              },
              0.5 * tol)
              .value;
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

}  // namespace pairlab

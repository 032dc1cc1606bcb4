#include "pairlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pairlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Vec2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * s;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  double s = len2 > 0 ? (p - a).dot(d) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + s * d)).norm();
}

}  // namespace

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  Interval r;
  if (a.lo > b.lo) {
    r.lo = a.lo;
    r.closed_lo = a.closed_lo;
  } else if (b.lo > a.lo) {
    r.lo = b.lo;
    r.closed_lo = b.closed_lo;
  } else {
    r.lo = a.lo;
    r.closed_lo = a.closed_lo && b.closed_lo;
  }
  if (a.hi < b.hi) {
    r.hi = a.hi;
    r.closed_hi = a.closed_hi;
  } else if (b.hi < a.hi) {
    r.hi = b.hi;
    r.closed_hi = b.closed_hi;
  } else {
    r.hi = a.hi;
    r.closed_hi = a.closed_hi && b.closed_hi;
  }
  if (r.lo > r.hi) return std::nullopt;
  if (r.lo == r.hi && !(r.closed_lo && r.closed_hi)) return std::nullopt;
  return r;
}

std::optional<Box> intersect(const Box& a, const Box& b) {
  Box r{a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
  if (r.lo.x() > r.hi.x() || r.lo.y() > r.hi.y()) return std::nullopt;
  return r;
}

double length(const Curve& c) {
  if (const auto* arc = std::get_if<CircleArc>(&c)) return arc->radius * (arc->theta1 - arc->theta0);
  const auto& pl = std::get<Polyline>(c);
  double s = 0.0;
  const std::size_t n = pl.points.size();
  for (std::size_t i = 0; i + 1 < n; ++i) s += (pl.points[i + 1] - pl.points[i]).norm();
  if (pl.closed && n > 1) s += (pl.points.front() - pl.points.back()).norm();
  return s;
}

std::optional<std::pair<double, double>> clip_segment(const Vec2& p0, const Vec2& p1, const Box& box) {
  double s0 = 0.0, s1 = 1.0;
  const Vec2 d = p1 - p0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {p0.x() - box.lo.x(), box.hi.x() - p0.x(), p0.y() - box.lo.y(), box.hi.y() - p0.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0)
      s0 = std::max(s0, r);
    else
      s1 = std::min(s1, r);
  }
  if (s0 >= s1) return std::nullopt;
  return std::make_pair(s0, s1);
}

std::vector<std::pair<double, double>> clip_arc(const CircleArc& arc, const Box& box) {
  std::vector<double> cuts{arc.theta0, arc.theta1};
  auto add_angle = [&](double th) {
    // Bring th into [theta0, theta0 + 2pi).
    double k = std::floor((th - arc.theta0) / kTwoPi);
    th -= k * kTwoPi;
    if (th > arc.theta0 && th < arc.theta1) cuts.push_back(th);
  };
  const double R = arc.radius;
  for (double X : {box.lo.x(), box.hi.x()}) {
    const double c = (X - arc.center.x()) / R;
    if (std::abs(c) <= 1.0) {
      const double a = std::acos(c);
      add_angle(a);
      add_angle(-a);
    }
  }
  for (double Y : {box.lo.y(), box.hi.y()}) {
    const double s = (Y - arc.center.y()) / R;
    if (std::abs(s) <= 1.0) {
      const double a = std::asin(s);
      add_angle(a);
      add_angle(std::numbers::pi - a);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    if (!box.contains(arc.at(0.5 * (a + b)))) continue;
    if (!out.empty() && out.back().second == a)
      out.back().second = b;
    else
      out.emplace_back(a, b);
  }
  return out;
}

double clipped_length(const Curve& c, const Box& box) {
  if (const auto* arc = std::get_if<CircleArc>(&c)) {
    double s = 0.0;
    for (auto [a, b] : clip_arc(*arc, box)) s += arc->radius * (b - a);
    return s;
  }
  const auto& pl = std::get<Polyline>(c);
  double s = 0.0;
  const std::size_t n = pl.points.size();
  const std::size_t segs = pl.closed ? n : (n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec2& a = pl.points[i];
    const Vec2& b = pl.points[(i + 1) % n];
    if (auto r = clip_segment(a, b, box)) s += (r->second - r->first) * (b - a).norm();
  }
  return s;
}

QuadResult integrate_curve(const Curve& c, const std::function<double(const Vec2&)>& h, const std::optional<Box>& clip,
                           const QuadOptions& opt) {
  QuadResult total;
  CompensatedSum sum;
  const double L = std::max(length(c), 1e-300);
  if (const auto* arc = std::get_if<CircleArc>(&c)) {
    std::vector<std::pair<double, double>> pieces;
    if (clip)
      pieces = clip_arc(*arc, *clip);
    else
      pieces.emplace_back(arc->theta0, arc->theta1);
    for (auto [a, b] : pieces) {
      QuadOptions local = opt;
      local.abs_tol = opt.abs_tol * arc->radius * (b - a) / L;
      QuadResult r = integrate([&](double th) { return h(arc->at(th)) * arc->radius; }, a, b, local);
      sum.add(r.value);
      r.value = 0;
      total += r;
    }
  } else {
    const auto& pl = std::get<Polyline>(c);
    const std::size_t n = pl.points.size();
    const std::size_t segs = pl.closed ? n : (n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < segs; ++i) {
      const Vec2 a = pl.points[i];
      const Vec2 b = pl.points[(i + 1) % n];
      const double len = (b - a).norm();
      if (len == 0.0) continue;
      double s0 = 0.0, s1 = 1.0;
      if (clip) {
        auto r = clip_segment(a, b, *clip);
        if (!r) continue;
        s0 = r->first;
        s1 = r->second;
      }
      QuadOptions local = opt;
      local.abs_tol = opt.abs_tol * len * (s1 - s0) / L;
      QuadResult r = integrate([&](double s) { return h(a + s * (b - a)) * len; }, s0, s1, local);
      sum.add(r.value);
      r.value = 0;
      total += r;
    }
  }
  total.value = sum.value();
  return total;
}

Polygon make_polygon(std::vector<Vec2> vertices) {
  if (vertices.size() < 3) throw LabError(ErrorKind::InvalidArgument, "polygon needs at least three vertices");
  const double a = signed_area(vertices);
  if (a == 0.0) throw LabError(ErrorKind::InvalidArgument, "polygon has zero area");
  if (a < 0.0) std::reverse(vertices.begin(), vertices.end());
  return Polygon{std::move(vertices)};
}

bool contains(const Shape& s, const Vec2& p) {
  if (const auto* d = std::get_if<Disc>(&s)) return (p - d->center).norm() < d->radius;
  const auto& v = std::get<Polygon>(s).vertices;
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if (((v[i].y() > p.y()) != (v[j].y() > p.y())) &&
        (p.x() < (v[j].x() - v[i].x()) * (p.y() - v[i].y()) / (v[j].y() - v[i].y()) + v[i].x()))
      inside = !inside;
  }
  return inside;
}

double area(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) return std::numbers::pi * d->radius * d->radius;
  return signed_area(std::get<Polygon>(s).vertices);
}

double perimeter(const Shape& s) { return length(boundary(s)); }

Box bounding_box(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s))
    return Box{d->center - Vec2::Constant(d->radius), d->center + Vec2::Constant(d->radius)};
  const auto& v = std::get<Polygon>(s).vertices;
  Box b{v.front(), v.front()};
  for (const auto& p : v) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

Curve boundary(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) return CircleArc{d->center, d->radius, 0.0, kTwoPi};
  return Polyline{std::get<Polygon>(s).vertices, true};
}

Vec2 interior_normal(const Shape& s, const Vec2& p) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    const Vec2 r = d->center - p;
    const double n = r.norm();
    return n > 0 ? Vec2(r / n) : Vec2(1.0, 0.0);
  }
  const auto& v = std::get<Polygon>(s).vertices;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = point_segment_distance(p, v[i], v[(i + 1) % v.size()]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const Vec2 e = v[(best + 1) % v.size()] - v[best];
  return Vec2(-e.y(), e.x()).normalized();
}

QuadResult integrate_area(const Shape& s, const AreaIntegrand& f, const std::optional<Vec2>& singular,
                          const QuadOptions& opt) {
  if (const auto* d = std::get_if<Disc>(&s)) {
    Vec2 anchor = d->center;
    if (singular && (*singular - d->center).norm() <= d->radius) anchor = *singular;
    const Vec2 off = anchor - d->center;
    const double R = d->radius;
    QuadOptions inner = opt;
    inner.abs_tol = 0.5 * opt.abs_tol / kTwoPi;
    QuadResult inner_acc;
    auto outer = [&](double th) {
      const Vec2 e(std::cos(th), std::sin(th));
      const double de = off.dot(e);
      const double rho = -de + std::sqrt(std::max(0.0, de * de - off.squaredNorm() + R * R));
      QuadResult r = integrate([&](double r) { return f(anchor + r * e) * r; }, 0.0, rho, inner);
      inner_acc.evals += r.evals;
      inner_acc.converged = inner_acc.converged && r.converged;
      return r.value;
    };
    QuadOptions outer_opt = opt;
    outer_opt.abs_tol = 0.5 * opt.abs_tol;
    QuadResult res = integrate(outer, 0.0, kTwoPi, outer_opt);
    res.evals += inner_acc.evals;
    res.converged = res.converged && inner_acc.converged;
    res.error += 0.5 * opt.abs_tol;
    return res;
  }
  const auto& v = std::get<Polygon>(s).vertices;
  Vec2 anchor = Vec2::Zero();
  for (const auto& p : v) anchor += p;
  anchor /= static_cast<double>(v.size());
  if (singular) {
    Box bb = bounding_box(s);
    if (bb.contains(*singular)) anchor = *singular;
  }
  QuadResult total;
  CompensatedSum sum;
  QuadOptions local = opt;
  local.abs_tol = opt.abs_tol / static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    QuadResult r = integrate_triangle(f, anchor, v[i], v[(i + 1) % v.size()], local);
    sum.add(r.value);
    r.value = 0.0;
    total += r;
  }
  total.value = sum.value();
  return total;
}

QuadResult integrate_area(const Box& b, const AreaIntegrand& f, const std::optional<Vec2>& singular,
                          const QuadOptions& opt, std::span<const double> xbreaks, std::span<const double> ybreaks) {
  if (singular && b.contains_open(*singular)) {
    const Vec2 s = *singular;
    const Vec2 corners[4] = {b.lo, Vec2(b.hi.x(), b.lo.y()), b.hi, Vec2(b.lo.x(), b.hi.y())};
    QuadResult total;
    CompensatedSum sum;
    QuadOptions local = opt;
    local.abs_tol = opt.abs_tol / 4.0;
    for (int i = 0; i < 4; ++i) {
      QuadResult r = integrate_triangle(f, s, corners[i], corners[(i + 1) % 4], local);
      sum.add(r.value);
      r.value = 0.0;
      total += r;
    }
    total.value = sum.value();
    return total;
  }
  return integrate_box([&](double x, double y) { return f(Vec2(x, y)); }, b.lo.x(), b.hi.x(), b.lo.y(), b.hi.y(),
                       xbreaks, ybreaks, opt);
}

namespace {

double bisect_root(const std::function<double(double)>& h, double lo, double hi, double flo) {
  for (int it = 0; it < 200 && hi - lo > 4e-16 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = h(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section minimization of sign*h on [a,b].
std::pair<double, double> golden_min(const std::function<double(double)>& h, double a, double b, double sign) {
  constexpr double g = 0.6180339887498949;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = sign * h(c), fd = sign * h(d);
  for (int it = 0; it < 80 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = sign * h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = sign * h(d);
    }
    if (fc < 0.0 || fd < 0.0) break;
  }
  return fc < fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

}  // namespace

std::vector<double> line_roots(const std::function<double(double)>& h, double a, double b,
                               std::span<const double> breaks, int samples) {
  std::vector<double> xs;
  xs.reserve(samples + breaks.size() + 2);
  for (int i = 0; i <= samples; ++i) xs.push_back(a + (b - a) * i / samples);
  for (double p : breaks)
    if (p > a && p < b) xs.push_back(p);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> fs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = h(xs[i]);
  std::vector<double> roots;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (fs[i] == 0.0) {
      roots.push_back(xs[i]);
      continue;
    }
    if (i > 0 && fs[i - 1] != 0.0 && (fs[i - 1] < 0.0) != (fs[i] < 0.0))
      roots.push_back(bisect_root(h, xs[i - 1], xs[i], fs[i - 1]));
    // A pair of close roots hides between samples when |h| has a local
    // minimum without a sign change.
    if (i > 0 && i + 1 < xs.size() && fs[i - 1] != 0.0 && fs[i + 1] != 0.0 && (fs[i - 1] < 0.0) == (fs[i] < 0.0) &&
        (fs[i + 1] < 0.0) == (fs[i] < 0.0) && std::abs(fs[i]) <= std::abs(fs[i - 1]) &&
        std::abs(fs[i]) <= std::abs(fs[i + 1])) {
      const double sign = fs[i] > 0.0 ? 1.0 : -1.0;
      const auto [xm, fm] = golden_min(h, xs[i - 1], xs[i + 1], sign);
      if (fm < 0.0) {
        roots.push_back(bisect_root(h, xs[i - 1], xm, fs[i - 1]));
        roots.push_back(bisect_root(h, xm, xs[i + 1], sign * fm));
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

namespace {

// Breakpoints for slicing {g = t}: grid lines, the coordinates of the extrema
// and the extents of the components around them, plus the points where the
// number of roots on a slice changes (located by bisection).
struct SliceBreaks {
  std::vector<double> x, y;
};

SliceBreaks slice_breaks(const LevelRegion& r, bool boundary_mode) {
  const double x0 = r.window.lo.x(), x1 = r.window.hi.x();
  const double y0 = r.window.lo.y(), y1 = r.window.hi.y();
  SliceBreaks b{r.xbreaks, r.ybreaks};
  for (const Vec2& c : r.extrema) {
    if (!r.window.contains(c)) continue;
    b.x.push_back(c.x());
    b.y.push_back(c.y());
  }
  std::sort(b.x.begin(), b.x.end());
  std::sort(b.y.begin(), b.y.end());
  std::vector<double> ex, ey;
  for (const Vec2& c : r.extrema) {
    if (!r.window.contains(c)) continue;
    auto hx = [&](double x) { return r.g(Vec2(x, c.y())) - r.t; };
    auto hy = [&](double y) { return r.g(Vec2(c.x(), y)) - r.t; };
    for (double x : line_roots(hx, x0, x1, b.x, r.samples_per_line)) ex.push_back(x);
    for (double y : line_roots(hy, y0, y1, b.y, r.samples_per_line)) ey.push_back(y);
  }
  b.x.insert(b.x.end(), ex.begin(), ex.end());
  b.y.insert(b.y.end(), ey.begin(), ey.end());
  std::sort(b.x.begin(), b.x.end());
  std::sort(b.y.begin(), b.y.end());

  // Signature of a slice: number of roots, and in boundary mode the number
  // of roots handled by this slicing direction.
  auto signature = [&](double s, bool along_x) {
    std::vector<double> roots;
    if (along_x)
      roots = line_roots([&](double y) { return r.g(Vec2(s, y)) - r.t; }, y0, y1, b.y, r.samples_per_line);
    else
      roots = line_roots([&](double x) { return r.g(Vec2(x, s)) - r.t; }, x0, x1, b.x, r.samples_per_line);
    long sig = static_cast<long>(roots.size());
    if (boundary_mode) {
      long mine = 0;
      for (double q : roots) {
        const Vec2 p = along_x ? Vec2(s, q) : Vec2(q, s);
        const Vec2 gr = r.grad(p);
        if (along_x ? std::abs(gr.y()) >= std::abs(gr.x()) : std::abs(gr.x()) > std::abs(gr.y())) ++mine;
      }
      sig += 1000 * mine;
    }
    return sig;
  };
  auto scan = [&](bool along_x, double lo, double hi, const std::vector<double>& seeds) {
    constexpr int n = 96;
    std::vector<double> ss = seeds;
    for (int i = 0; i <= n; ++i) ss.push_back(lo + (hi - lo) * i / n);
    std::sort(ss.begin(), ss.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
    std::vector<double> out;
    long prev = signature(ss[0], along_x);
    for (std::size_t i = 1; i < ss.size(); ++i) {
      const long cur = signature(ss[i], along_x);
      if (cur != prev) {
        double a = ss[i - 1], c = ss[i];
        for (int it = 0; it < 48 && c - a > 1e-13 * (hi - lo); ++it) {
          const double m = 0.5 * (a + c);
          if (signature(m, along_x) == prev)
            a = m;
          else
            c = m;
        }
        out.push_back(0.5 * (a + c));
      }
      prev = cur;
    }
    return out;
  };
  const auto tx = scan(true, x0, x1, b.x);
  const auto ty = boundary_mode ? scan(false, y0, y1, b.y) : std::vector<double>{};
  b.x.insert(b.x.end(), tx.begin(), tx.end());
  b.y.insert(b.y.end(), ty.begin(), ty.end());
  std::sort(b.x.begin(), b.x.end());
  std::sort(b.y.begin(), b.y.end());
  return b;
}

}  // namespace

QuadResult integrate_area(const LevelRegion& r, const AreaIntegrand& f, const QuadOptions& opt) {
  const double x0 = r.window.lo.x(), x1 = r.window.hi.x();
  const double y0 = r.window.lo.y(), y1 = r.window.hi.y();
  const SliceBreaks br = slice_breaks(r, false);
  QuadOptions inner = opt;
  inner.abs_tol = 0.25 * opt.abs_tol / std::max(x1 - x0, 1e-300);
  QuadResult inner_acc;
  auto outer = [&](double x) {
    auto h = [&](double y) { return r.g(Vec2(x, y)) - r.t; };
    std::vector<double> pts = line_roots(h, y0, y1, br.y, r.samples_per_line);
    pts.insert(pts.begin(), y0);
    pts.push_back(y1);
    CompensatedSum s;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i], b = pts[i + 1];
      if (!(b > a) || h(0.5 * (a + b)) <= 0.0) continue;
      QuadOptions piece = inner;
      piece.abs_tol = inner.abs_tol * (b - a) / (y1 - y0);
      QuadResult q = integrate([&](double y) { return f(Vec2(x, y)); }, a, b, r.ybreaks, piece);
      inner_acc.evals += q.evals;
      inner_acc.converged = inner_acc.converged && q.converged;
      s.add(q.value);
    }
    return s.value();
  };
  QuadOptions outer_opt = opt;
  outer_opt.abs_tol = 0.75 * opt.abs_tol;
  QuadResult res = integrate(outer, x0, x1, br.x, outer_opt);
  res.evals += inner_acc.evals;
  res.converged = res.converged && inner_acc.converged;
  res.error += 0.25 * opt.abs_tol;
  return res;
}

QuadResult integrate_boundary(const LevelRegion& r, const std::function<double(const Vec2&, const Vec2&)>& h,
                              const QuadOptions& opt) {
  const double x0 = r.window.lo.x(), x1 = r.window.hi.x();
  const double y0 = r.window.lo.y(), y1 = r.window.hi.y();
  const SliceBreaks br = slice_breaks(r, true);
  auto contribution = [&](const Vec2& p, bool slicing_in_x) -> double {
    const Vec2 gr = r.grad(p);
    const double gn = gr.norm();
    if (gn == 0.0) return 0.0;
    const double gx = std::abs(gr.x()), gy = std::abs(gr.y());
    if (slicing_in_x) {
      if (gy < gx) return 0.0;
      return h(p, gr / gn) * gn / gy;
    }
    if (gx <= gy) return 0.0;
    return h(p, gr / gn) * gn / gx;
  };
  auto slice_x = [&](double x) {
    auto hy = [&](double y) { return r.g(Vec2(x, y)) - r.t; };
    double s = 0.0;
    for (double y : line_roots(hy, y0, y1, br.y, r.samples_per_line)) s += contribution(Vec2(x, y), true);
    return s;
  };
  auto slice_y = [&](double y) {
    auto hx = [&](double x) { return r.g(Vec2(x, y)) - r.t; };
    double s = 0.0;
    for (double x : line_roots(hx, x0, x1, br.x, r.samples_per_line)) s += contribution(Vec2(x, y), false);
    return s;
  };
  QuadOptions half = opt;
  half.abs_tol = 0.5 * opt.abs_tol;
  QuadResult a = integrate(slice_x, x0, x1, br.x, half);
  QuadResult b = integrate(slice_y, y0, y1, br.y, half);
  a += b;
  return a;
}

}  // namespace pairlab

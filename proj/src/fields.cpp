#include "pairlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace pairlab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultTBound = 16.0;

// sup over s in [lo,hi] of |sin s|
double sup_abs_sin(double lo, double hi) {
  if (hi < lo) std::swap(lo, hi);
  if (hi - lo >= std::numbers::pi) return 1.0;
  const double k = std::ceil((lo - 0.5 * std::numbers::pi) / std::numbers::pi);
  if (0.5 * std::numbers::pi + k * std::numbers::pi <= hi) return 1.0;
  return std::max(std::abs(std::sin(lo)), std::abs(std::sin(hi)));
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double param(const json& p, const char* key, double fallback) {
  return p.contains(key) ? p.at(key).get<double>() : fallback;
}

Vec2 vec_param(const json& p, const char* key, const Vec2& fallback) {
  if (!p.contains(key)) return fallback;
  const auto v = p.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw LabError(ErrorKind::SpecError, std::string("parameter '") + key + "' needs two entries");
  return {v[0], v[1]};
}

// g(t) factor of a separable field
struct TProfile {
  std::string name;
  std::function<double(double)> value, primitive;
  double lipschitz = 0.0;
  std::function<double(double, double)> sup_abs;  // over [lo,hi]
};

std::string kind_of(const json& spec) {
  return spec.is_string() ? spec.get<std::string>() : spec.at("kind").get<std::string>();
}

TProfile make_tprofile(const json& spec) {
  const std::string kind = kind_of(spec);
  const json p = spec.is_object() ? spec : json::object();
  TProfile g;
  g.name = kind;
  if (kind == "one") {
    g.value = [](double) { return 1.0; };
    g.primitive = [](double t) { return t; };
    g.sup_abs = [](double, double) { return 1.0; };
  } else if (kind == "linear") {
    const double c0 = param(p, "c0", 0.0), c1 = param(p, "c1", 1.0);
    g.value = [=](double t) { return c0 + c1 * t; };
    g.primitive = [=](double t) { return c0 * t + 0.5 * c1 * t * t; };
    g.lipschitz = std::abs(c1);
    g.sup_abs = [=](double lo, double hi) { return std::max(std::abs(c0 + c1 * lo), std::abs(c0 + c1 * hi)); };
  } else if (kind == "sin") {
    const double a = param(p, "amplitude", 1.0), w = param(p, "omega", 1.0), ph = param(p, "phase", 0.0);
    if (w == 0.0) throw LabError(ErrorKind::SpecError, "sin profile needs a nonzero omega");
    g.value = [=](double t) { return a * std::sin(w * t + ph); };
    g.primitive = [=](double t) { return a * (std::cos(ph) - std::cos(w * t + ph)) / w; };
    g.lipschitz = std::abs(a * w);
    g.sup_abs = [=](double lo, double hi) { return std::abs(a) * sup_abs_sin(w * lo + ph, w * hi + ph); };
  } else if (kind == "tanh") {
    const double a = param(p, "amplitude", 1.0), wd = param(p, "width", 1.0);
    if (!(wd > 0.0)) throw LabError(ErrorKind::SpecError, "tanh profile needs a positive width");
    g.value = [=](double t) { return a * std::tanh(t / wd); };
    g.primitive = [=](double t) { return a * wd * log_cosh(t / wd); };
    g.lipschitz = std::abs(a) / wd;
    g.sup_abs = [=](double lo, double hi) { return std::abs(a) * std::max(std::abs(std::tanh(lo / wd)), std::abs(std::tanh(hi / wd))); };
  } else {
    throw LabError(ErrorKind::SpecError, "unknown t-profile '" + kind + "'");
  }
  return g;
}

// a(x) factor in 1D
struct XProfile1 {
  std::function<double(double)> value, derivative;
  std::function<double(double, double)> sup_abs;
  std::vector<double> breaks;
};

XProfile1 make_xprofile_1d(const json& spec) {
  const std::string kind = kind_of(spec);
  XProfile1 a;
  if (kind == "const") {
    const double c = param(spec, "c", 1.0);
    a.value = [=](double) { return c; };
    a.derivative = [](double) { return 0.0; };
    a.sup_abs = [=](double, double) { return std::abs(c); };
  } else if (kind == "affine") {
    const double c0 = param(spec, "c0", 0.0), c1 = param(spec, "c1", 1.0);
    a.value = [=](double x) { return c0 + c1 * x; };
    a.derivative = [=](double) { return c1; };
    a.sup_abs = [=](double lo, double hi) { return std::max(std::abs(c0 + c1 * lo), std::abs(c0 + c1 * hi)); };
  } else if (kind == "sin") {
    const double amp = param(spec, "amplitude", 1.0), k = param(spec, "k", 1.0), ph = param(spec, "phase", 0.0);
    a.value = [=](double x) { return amp * std::sin(k * x + ph); };
    a.derivative = [=](double x) { return amp * k * std::cos(k * x + ph); };
    a.sup_abs = [=](double lo, double hi) { return std::abs(amp) * sup_abs_sin(k * lo + ph, k * hi + ph); };
  } else if (kind == "tanh") {
    const double amp = param(spec, "amplitude", 1.0), c = param(spec, "center", 0.0), wd = param(spec, "width", 1.0);
    if (!(wd > 0.0)) throw LabError(ErrorKind::SpecError, "tanh profile needs a positive width");
    a.value = [=](double x) { return amp * std::tanh((x - c) / wd); };
    a.derivative = [=](double x) {
      const double s = 1.0 / std::cosh((x - c) / wd);
      return amp * s * s / wd;
    };
    a.sup_abs = [=](double lo, double hi) {
      return std::abs(amp) * std::max(std::abs(std::tanh((lo - c) / wd)), std::abs(std::tanh((hi - c) / wd)));
    };
  } else {
    throw LabError(ErrorKind::SpecError, "unknown 1D x-profile '" + kind + "'");
  }
  return a;
}

// a(x) factor in 2D
struct XProfile2 {
  std::function<Vec2(const Vec2&)> value;
  std::function<double(const Vec2&)> div;
  std::function<double(const Box&)> sup_abs;
};

double max_corner_norm(const Box& b, const std::function<Vec2(const Vec2&)>& f) {
  const Vec2 c[4] = {b.lo, Vec2(b.hi.x(), b.lo.y()), b.hi, Vec2(b.lo.x(), b.hi.y())};
  double m = 0.0;
  for (const Vec2& p : c) m = std::max(m, f(p).norm());
  return m;
}

XProfile2 make_xprofile_2d(const json& spec) {
  const std::string kind = kind_of(spec);
  XProfile2 a;
  if (kind == "const") {
    const Vec2 c = vec_param(spec, "c", Vec2(1.0, 0.0));
    a.value = [=](const Vec2&) { return c; };
    a.div = [](const Vec2&) { return 0.0; };
    a.sup_abs = [=](const Box&) { return c.norm(); };
  } else if (kind == "identity" || kind == "swirl" || kind == "linear") {
    Eigen::Matrix2d m;
    Vec2 offset = Vec2::Zero();
    if (kind == "linear") {
      const auto rows = spec.at("matrix").get<std::vector<std::vector<double>>>();
      if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
        throw LabError(ErrorKind::SpecError, "linear profile needs a 2x2 matrix");
      m << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
      offset = vec_param(spec, "offset", Vec2::Zero());
    } else {
      const double s = param(spec, "scale", 1.0);
      const Vec2 c = vec_param(spec, "center", Vec2::Zero());
      if (kind == "identity")
        m << s, 0.0, 0.0, s;
      else
        m << 0.0, -s, s, 0.0;
      offset = -m * c;
    }
    auto f = [=](const Vec2& x) -> Vec2 { return m * x + offset; };
    const double tr = m.trace();
    a.value = f;
    a.div = [=](const Vec2&) { return tr; };
    a.sup_abs = [=](const Box& b) { return max_corner_norm(b, f); };
  } else {
    throw LabError(ErrorKind::SpecError, "unknown 2D x-profile '" + kind + "'");
  }
  return a;
}

double t_bound_of(const json& spec, bool needed) {
  if (spec.contains("t_bound")) {
    const double t = spec.at("t_bound").get<double>();
    if (!(t > 0.0)) throw LabError(ErrorKind::SpecError, "t_bound must be positive");
    return t;
  }
  return needed ? kDefaultTBound : kInf;
}

template <int Dim>
void zero_outside(Field<Dim>& f) {
  using P = Point<Dim>;
  const auto dom = f.domain;
  auto inside = [dom](const P& x) {
    if constexpr (Dim == 1)
      return x >= dom.lo && x <= dom.hi;
    else
      return dom.contains(x);
  };
  auto wrap_vec = [&](std::function<P(const P&, double)> g) {
    return std::function<P(const P&, double)>([g, inside](const P& x, double t) -> P {
      if (inside(x)) return g(x, t);
      if constexpr (Dim == 1)
        return 0.0;
      else
        return Vec2::Zero();
    });
  };
  auto wrap_scalar = [&](std::function<double(const P&, double)> g) {
    return std::function<double(const P&, double)>(
        [g, inside](const P& x, double t) { return inside(x) ? g(x, t) : 0.0; });
  };
  f.eval = wrap_vec(f.eval);
  f.primitive = wrap_vec(f.primitive);
  f.div = wrap_scalar(f.div);
  f.div_primitive = wrap_scalar(f.div_primitive);
  auto s = f.sigma;
  f.sigma = [s, inside](const P& x) { return inside(x) ? s(x) : 0.0; };
}

template <int Dim>
void apply_declared(Field<Dim>& f, const json& spec) {
  if (spec.contains("L")) f.lipschitz = spec.at("L").get<double>();
  if (spec.contains("M")) {
    const double m = spec.at("M").get<double>();
    const double derived = f.sup_abs(f.domain, std::min(f.t_bound, kDefaultTBound));
    if (derived > m * (1.0 + 1e-12))
      throw LabError(ErrorKind::AssumptionViolation,
                     "boundedness: sup |b| = " + std::to_string(derived) + " exceeds declared M = " +
                         std::to_string(m));
  }
}

const json& params_of(const json& spec) {
  static const json empty = json::object();
  return spec.contains("params") ? spec.at("params") : empty;
}

}  // namespace

// ---------------------------------------------------------------------------

std::function<double(double, double)> centered_divergence(const std::function<double(double, double)>& b,
                                                         double scale) {
  const double h = 1e-5 * scale;
  return [b, h](double x, double t) { return (b(x + h, t) - b(x - h, t)) / (2.0 * h); };
}

std::function<double(const Vec2&, double)> centered_divergence(const std::function<Vec2(const Vec2&, double)>& b,
                                                              double scale) {
  const double h = 1e-5 * scale;
  return [b, h](const Vec2& x, double t) {
    const Vec2 ex(h, 0.0), ey(0.0, h);
    return (b(x + ex, t).x() - b(x - ex, t).x() + b(x + ey, t).y() - b(x - ey, t).y()) / (2.0 * h);
  };
}

Field1D make_field_1d(const json& spec, const Interval& domain) {
  if (!(domain.hi > domain.lo)) throw LabError(ErrorKind::InvalidArgument, "field domain must be non-empty");
  const std::string kind = spec.at("kind").get<std::string>();
  const json& p = params_of(spec);
  Field1D f;
  f.kind = kind;
  f.domain = domain;
  if (kind == "constant" || kind == "product" || kind == "separable") {
    TProfile g;
    XProfile1 a;
    if (kind == "constant") {
      g = make_tprofile("one");
      a = make_xprofile_1d(json{{"kind", "const"}, {"c", param(p, "c", 1.0)}});
    } else if (kind == "product") {
      g = make_tprofile(json{{"kind", "linear"}, {"c0", 0.0}, {"c1", 1.0}});
      a = make_xprofile_1d(json{{"kind", "affine"}, {"c0", 0.0}, {"c1", param(p, "scale", 1.0)}});
    } else {
      g = make_tprofile(p.at("g"));
      a = make_xprofile_1d(p.at("a"));
    }
    const double tb = t_bound_of(spec, g.name == "linear");
    f.t_bound = tb;
    const double gsup = g.sup_abs(-tb, tb);
    f.eval = [g, a](double x, double t) { return g.value(t) * a.value(x); };
    f.div = [g, a](double x, double t) { return g.value(t) * a.derivative(x); };
    f.primitive = [g, a](double x, double t) { return g.primitive(t) * a.value(x); };
    f.div_primitive = [g, a](double x, double t) { return g.primitive(t) * a.derivative(x); };
    f.lipschitz = g.lipschitz * a.sup_abs(domain.lo, domain.hi);
    f.sigma = [gsup, a](double x) { return gsup * std::abs(a.derivative(x)); };
    f.sup_abs = [g, a](const Interval& k, double tmax) { return g.sup_abs(-tmax, tmax) * a.sup_abs(k.lo, k.hi); };
    f.t_independent = g.name == "one";
  } else if (kind == "sin_shift") {
    const double amp = param(p, "amplitude", 1.0);
    const double tb = t_bound_of(spec, false);
    f.t_bound = tb;
    f.eval = [=](double x, double t) { return amp * std::sin(x + t); };
    f.div = [=](double x, double t) { return amp * std::cos(x + t); };
    f.primitive = [=](double x, double t) { return amp * (std::cos(x) - std::cos(x + t)); };
    f.div_primitive = [=](double x, double t) { return amp * (std::sin(x + t) - std::sin(x)); };
    f.lipschitz = std::abs(amp);
    f.sigma = [=](double x) {
      if (!std::isfinite(tb)) return std::abs(amp);
      return std::abs(amp) * sup_abs_sin(x - tb + 0.5 * std::numbers::pi, x + tb + 0.5 * std::numbers::pi);
    };
    f.sup_abs = [=](const Interval& k, double tmax) { return std::abs(amp) * sup_abs_sin(k.lo - tmax, k.hi + tmax); };
  } else {
    throw LabError(ErrorKind::SpecError, "unknown 1D field kind '" + kind + "'");
  }
  zero_outside(f);
  apply_declared(f, spec);
  check_assumptions(f);
  return f;
}

Field2D make_field_2d(const json& spec, const Box& domain) {
  if (!(domain.area() > 0.0)) throw LabError(ErrorKind::InvalidArgument, "field domain must have positive area");
  const std::string kind = spec.at("kind").get<std::string>();
  const json& p = params_of(spec);
  Field2D f;
  f.kind = kind;
  f.domain = domain;
  if (kind == "constant" || kind == "product" || kind == "separable") {
    TProfile g;
    XProfile2 a;
    if (kind == "constant") {
      const Vec2 c = vec_param(p, "c", Vec2(1.0, 0.0));
      g = make_tprofile("one");
      a = make_xprofile_2d(json{{"kind", "const"}, {"c", {c.x(), c.y()}}});
    } else if (kind == "product") {
      g = make_tprofile(json{{"kind", "linear"}, {"c0", 0.0}, {"c1", 1.0}});
      a = make_xprofile_2d(json{{"kind", "identity"}, {"scale", param(p, "scale", 1.0)}});
    } else {
      g = make_tprofile(p.at("g"));
      a = make_xprofile_2d(p.at("a"));
    }
    const double tb = t_bound_of(spec, g.name == "linear");
    f.t_bound = tb;
    const double gsup = g.sup_abs(-tb, tb);
    f.eval = [g, a](const Vec2& x, double t) -> Vec2 { return g.value(t) * a.value(x); };
    f.div = [g, a](const Vec2& x, double t) { return g.value(t) * a.div(x); };
    f.primitive = [g, a](const Vec2& x, double t) -> Vec2 { return g.primitive(t) * a.value(x); };
    f.div_primitive = [g, a](const Vec2& x, double t) { return g.primitive(t) * a.div(x); };
    f.lipschitz = g.lipschitz * a.sup_abs(domain);
    f.sigma = [gsup, a](const Vec2& x) { return gsup * std::abs(a.div(x)); };
    f.sup_abs = [g, a](const Box& k, double tmax) { return g.sup_abs(-tmax, tmax) * a.sup_abs(k); };
    f.t_independent = g.name == "one";
  } else if (kind == "sin_shift") {
    const double amp = param(p, "amplitude", 1.0);
    f.t_bound = t_bound_of(spec, false);
    f.eval = [=](const Vec2& x, double t) -> Vec2 {
      return amp * Vec2(std::sin(x.x() + t), std::cos(x.y() - t));
    };
    f.div = [=](const Vec2& x, double t) { return amp * (std::cos(x.x() + t) - std::sin(x.y() - t)); };
    f.primitive = [=](const Vec2& x, double t) -> Vec2 {
      return amp * Vec2(std::cos(x.x()) - std::cos(x.x() + t), std::sin(x.y()) - std::sin(x.y() - t));
    };
    f.div_primitive = [=](const Vec2& x, double t) {
      return amp * (std::sin(x.x() + t) - std::sin(x.x()) + std::cos(x.y()) - std::cos(x.y() - t));
    };
    f.lipschitz = std::abs(amp) * std::numbers::sqrt2;
    // cos(x+t) - sin(y-t) = R cos(x + t - delta) with R^2 = 2 - 2 sin(x + y); the t-range is all of R
    // once t_bound >= pi.
    const double tb = f.t_bound;
    f.sigma = [=](const Vec2& x) {
      const double r = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sin(x.x() + x.y())));
      if (tb >= std::numbers::pi) return std::abs(amp) * r;
      double best = 0.0;
      constexpr int n = 512;
      for (int i = 0; i <= n; ++i) {
        const double t = -tb + 2.0 * tb * i / n;
        best = std::max(best, std::abs(std::cos(x.x() + t) - std::sin(x.y() - t)));
      }
      return std::abs(amp) * std::min(r, best + tb / n * 2.0);
    };
    f.sup_abs = [=](const Box&, double) { return std::abs(amp) * std::numbers::sqrt2; };
  } else if (kind == "radial2d") {
    const double amp = param(p, "amplitude", 1.0);
    const Vec2 c = vec_param(p, "center", Vec2::Zero());
    auto unit = [c](const Vec2& x) -> Vec2 {
      const Vec2 d = x - c;
      const double n = d.norm();
      return n > 0.0 ? Vec2(d / n) : Vec2::Zero();
    };
    auto inv = [c](const Vec2& x) {
      const double n = (x - c).norm();
      return n > 0.0 ? 1.0 / n : 0.0;
    };
    f.eval = [=](const Vec2& x, double) -> Vec2 { return amp * unit(x); };
    f.div = [=](const Vec2& x, double) { return amp * inv(x); };
    f.primitive = [=](const Vec2& x, double t) -> Vec2 { return t * amp * unit(x); };
    f.div_primitive = [=](const Vec2& x, double t) { return t * amp * inv(x); };
    f.lipschitz = 0.0;
    f.sigma = [=](const Vec2& x) { return std::abs(amp) * inv(x); };
    f.sup_abs = [=](const Box&, double) { return std::abs(amp); };
    f.singular = c;
    f.t_independent = true;
  } else {
    throw LabError(ErrorKind::SpecError, "unknown 2D field kind '" + kind + "'");
  }
  zero_outside(f);
  apply_declared(f, spec);
  check_assumptions(f);
  return f;
}

// ---------------------------------------------------------------------------

namespace {

template <int Dim>
void check_sampled(const Field<Dim>& f, int samples) {
  using P = Point<Dim>;
  std::mt19937_64 rng(20240611);
  const double tmax = std::min(f.t_bound, kDefaultTBound);
  std::uniform_real_distribution<double> tdist(-tmax, tmax);
  auto draw_x = [&]() -> P {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if constexpr (Dim == 1) {
      return f.domain.lo + (f.domain.hi - f.domain.lo) * (0.02 + 0.96 * u01(rng));
    } else {
      for (;;) {
        const Vec2 p = f.domain.lo + (f.domain.hi - f.domain.lo).cwiseProduct(
                                         Vec2(0.02 + 0.96 * u01(rng), 0.02 + 0.96 * u01(rng)));
        if (!f.singular || (p - *f.singular).norm() > 1e-3) return p;
      }
    }
  };
  double scale;
  if constexpr (Dim == 1)
    scale = f.domain.hi - f.domain.lo;
  else
    scale = (f.domain.hi - f.domain.lo).maxCoeff();
  double worst_lip = 0.0, worst_sigma = 0.0;
  for (int i = 0; i < samples; ++i) {
    const P x = draw_x();
    const double t = tdist(rng), s = tdist(rng);
    if (t != s) worst_lip = std::max(worst_lip, norm(f.eval(x, t) - f.eval(x, s)) / std::abs(t - s));
    const double d = std::abs(f.div(x, t));
    const double sg = f.sigma(x);
    if (d > sg * (1.0 + 1e-9) + 1e-12) worst_sigma = std::max(worst_sigma, d - sg);
    if (norm(f.primitive(x, 0.0)) > 0.0)
      throw LabError(ErrorKind::AssumptionViolation, "primitive B(x,0) must vanish");
    if (i % 8 == 0) {
      bool near_singular = false;
      if constexpr (Dim == 2) near_singular = f.singular && (x - *f.singular).norm() < 0.05;
      if (!near_singular) {
        const double fd = centered_divergence(f.eval, scale)(x, t);
        if (std::abs(fd - f.div(x, t)) > 1e-6 * (1.0 + std::abs(fd)))
          throw LabError(ErrorKind::AssumptionViolation, "Div_x b disagrees with finite differences of b");
      }
      QuadOptions q;
      q.abs_tol = 1e-11 * (1.0 + std::abs(t - s));
      for (int comp = 0; comp < Dim; ++comp) {
        auto component = [&](const P& v) {
          if constexpr (Dim == 1)
            return v;
          else
            return v[comp];
        };
        const double lo = std::min(s, t), hi = std::max(s, t);
        const double sign = t >= s ? 1.0 : -1.0;
        const double quad = sign * integrate([&](double r) { return component(f.eval(x, r)); }, lo, hi, q).value;
        const double diff = component(f.primitive(x, t)) - component(f.primitive(x, s));
        if (std::abs(quad - diff) > 1e-8 * (1.0 + std::abs(diff)))
          throw LabError(ErrorKind::AssumptionViolation, "primitive B is not the t-integral of b");
      }
    }
  }
  if (worst_lip > f.lipschitz * (1.0 + 1e-9) + 1e-12)
    throw LabError(ErrorKind::AssumptionViolation, "Lipschitz in t: sampled quotient " +
                                                       std::to_string(worst_lip) + " exceeds declared L = " +
                                                       std::to_string(f.lipschitz));
  if (worst_sigma > 0.0)
    throw LabError(ErrorKind::AssumptionViolation,
                   "|Div b_t| exceeds sigma by " + std::to_string(worst_sigma) + " at a sample");
}

}  // namespace

void check_assumptions(const Field1D& f, int samples) { check_sampled(f, samples); }
void check_assumptions(const Field2D& f, int samples) { check_sampled(f, samples); }

// ---------------------------------------------------------------------------

namespace {

double bump(double s2) { return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0; }

struct Kernel1D {
  std::vector<double> nodes, weights;
};

struct Kernel2D {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
};

const Kernel1D& kernel_1d() {
  static const Kernel1D k = [] {
    Kernel1D r;
    const GaussRule g = gauss_legendre(24);
    double total = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      r.nodes.push_back(g.nodes[i]);
      r.weights.push_back(g.weights[i] * bump(g.nodes[i] * g.nodes[i]));
      total += r.weights.back();
    }
    for (double& w : r.weights) w /= total;
    return r;
  }();
  return k;
}

const Kernel2D& kernel_2d() {
  static const Kernel2D k = [] {
    Kernel2D r;
    const GaussRule g = gauss_legendre(8);
    constexpr int m = 16;
    double total = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double rho = 0.5 * (g.nodes[i] + 1.0);
      const double w = 0.5 * g.weights[i] * rho * bump(rho * rho);
      for (int j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * j / m;
        r.nodes.emplace_back(rho * std::cos(th), rho * std::sin(th));
        r.weights.push_back(w);
        total += w;
      }
    }
    for (double& w : r.weights) w /= total;
    return r;
  }();
  return k;
}

template <class R, class K, class P, class F>
R smear(const K& k, double eps, const P& x, double t, const F& g) {
  R acc;
  if constexpr (std::is_same_v<R, double>)
    acc = 0.0;
  else
    acc.setZero();
  for (std::size_t i = 0; i < k.nodes.size(); ++i) acc += k.weights[i] * g(x - eps * k.nodes[i], t);
  return acc;
}

}  // namespace

Field1D mollify(const Field1D& f, double eps, const Interval& window) {
  if (!(eps > 0.0)) throw LabError(ErrorKind::InvalidArgument, "mollification radius must be positive");
  if (window.lo - eps < f.domain.lo || window.hi + eps > f.domain.hi)
    throw LabError(ErrorKind::WindowTooLarge, "eps-neighbourhood of the window leaves the field domain");
  const Kernel1D& k = kernel_1d();
  Field1D m = f;
  m.kind = f.kind + "*rho";
  auto b = f.eval;
  auto d = f.div;
  auto bp = f.primitive;
  auto dp = f.div_primitive;
  auto s = f.sigma;
  m.eval = [=, &k](double x, double t) { return smear<double>(k, eps, x, t, b); };
  m.div = [=, &k](double x, double t) { return smear<double>(k, eps, x, t, d); };
  m.primitive = [=, &k](double x, double t) { return smear<double>(k, eps, x, t, bp); };
  m.div_primitive = [=, &k](double x, double t) { return smear<double>(k, eps, x, t, dp); };
  m.sigma = [=, &k](double x) { return smear<double>(k, eps, x, 0.0, [&](double y, double) { return s(y); }); };
  auto sup = f.sup_abs;
  m.sup_abs = [=](const Interval& w, double tmax) { return sup({w.lo - eps, w.hi + eps, true, true}, tmax); };
  m.xbreaks.clear();
  return m;
}

Field2D mollify(const Field2D& f, double eps, const Box& window) {
  if (!(eps > 0.0)) throw LabError(ErrorKind::InvalidArgument, "mollification radius must be positive");
  if (!f.domain.contains(window.lo - Vec2(eps, eps)) ||
      !f.domain.contains(window.hi + Vec2(eps, eps)))
    throw LabError(ErrorKind::WindowTooLarge, "eps-neighbourhood of the window leaves the field domain");
  const Kernel2D& k = kernel_2d();
  Field2D m = f;
  m.kind = f.kind + "*rho";
  auto b = f.eval;
  auto d = f.div;
  auto bp = f.primitive;
  auto dp = f.div_primitive;
  auto s = f.sigma;
  m.eval = [=, &k](const Vec2& x, double t) -> Vec2 { return smear<Vec2>(k, eps, x, t, b); };
  m.div = [=, &k](const Vec2& x, double t) { return smear<double>(k, eps, x, t, d); };
  m.primitive = [=, &k](const Vec2& x, double t) -> Vec2 { return smear<Vec2>(k, eps, x, t, bp); };
  m.div_primitive = [=, &k](const Vec2& x, double t) { return smear<double>(k, eps, x, t, dp); };
  m.sigma = [=, &k](const Vec2& x) {
    return smear<double>(k, eps, x, 0.0, [&](const Vec2& y, double) { return s(y); });
  };
  auto sup = f.sup_abs;
  m.sup_abs = [=](const Box& w, double tmax) { return sup({w.lo - Vec2(eps, eps), w.hi + Vec2(eps, eps)}, tmax); };
  m.singular.reset();
  m.xbreaks.clear();
  m.ybreaks.clear();
  return m;
}

// ---------------------------------------------------------------------------

double sigma_k(int k, double t) {
  const double a = std::abs(t);
  if (a <= k - 1) return 1.0;
  if (a <= k) return k - a;
  return 0.0;
}

double sigma_k_primitive(int k, double t) {
  const double a = std::abs(t);
  const double km = k - 1.0;
  double v;
  if (a <= km)
    v = a;
  else if (a <= k)
    v = km + k * (a - km) - 0.5 * (a * a - km * km);
  else
    v = km + 0.5;
  return t < 0.0 ? -v : v;
}

namespace {

// int_0^t sigma_k(s) h(s) ds, split where sigma_k kinks.
double truncated_primitive(int k, double t, const std::function<double(double)>& h) {
  if (t == 0.0) return 0.0;
  const double sign = t > 0.0 ? 1.0 : -1.0;
  const double a = std::min(std::abs(t), static_cast<double>(k));
  const std::vector<double> br{k - 1.0};
  QuadOptions q;
  q.abs_tol = 1e-13 * (1.0 + a);
  return sign * integrate([&](double s) { return sigma_k(k, s) * h(sign * s); }, 0.0, a, br, q).value;
}

template <int Dim>
Field<Dim> truncate_impl(const Field<Dim>& f, int k) {
  using P = Point<Dim>;
  if (k < 1) throw LabError(ErrorKind::InvalidArgument, "truncation index must be at least 1");
  Field<Dim> r = f;
  r.kind = f.kind + "^k" + std::to_string(k);
  auto b = f.eval;
  auto d = f.div;
  auto bp = f.primitive;
  auto dp = f.div_primitive;
  r.eval = [=](const P& x, double t) -> P { return sigma_k(k, t) * b(x, t); };
  r.div = [=](const P& x, double t) { return sigma_k(k, t) * d(x, t); };
  if (f.t_independent) {
    r.primitive = [=](const P& x, double t) -> P { return sigma_k_primitive(k, t) * b(x, 0.0); };
    r.div_primitive = [=](const P& x, double t) { return sigma_k_primitive(k, t) * d(x, 0.0); };
  } else {
    r.primitive = [=](const P& x, double t) -> P {
      if constexpr (Dim == 1) {
        return truncated_primitive(k, t, [&](double s) { return b(x, s); });
      } else {
        return Vec2(truncated_primitive(k, t, [&](double s) { return b(x, s).x(); }),
                    truncated_primitive(k, t, [&](double s) { return b(x, s).y(); }));
      }
    };
    r.div_primitive = [=](const P& x, double t) {
      return truncated_primitive(k, t, [&](double s) { return d(x, s); });
    };
  }
  // |s_k(t) b(t) - s_k(s) b(s)| <= L |t - s| + sup_{|t| <= k} |b| |t - s|
  r.lipschitz = f.lipschitz + f.sup_abs(f.domain, static_cast<double>(k));
  auto sup = f.sup_abs;
  r.sup_abs = [=](const Window<Dim>& w, double tmax) { return sup(w, std::min(tmax, static_cast<double>(k))); };
  for (double t : {-1.0 * k, 1.0 - k, k - 1.0, 1.0 * k}) r.tbreaks.push_back(t);
  std::sort(r.tbreaks.begin(), r.tbreaks.end());
  r.tbreaks.erase(std::unique(r.tbreaks.begin(), r.tbreaks.end()), r.tbreaks.end());
  r.t_independent = false;
  return r;
}

template <int Dim>
Field<Dim> freeze_impl(const Field<Dim>& f, double tau) {
  using P = Point<Dim>;
  Field<Dim> r = f;
  r.kind = f.kind + "@tau";
  r.tbreaks.clear();
  auto b = f.eval;
  auto d = f.div;
  r.eval = [=](const P& x, double) -> P { return b(x, tau); };
  r.div = [=](const P& x, double) { return d(x, tau); };
  r.primitive = [=](const P& x, double t) -> P { return t * b(x, tau); };
  r.div_primitive = [=](const P& x, double t) { return t * d(x, tau); };
  r.lipschitz = 0.0;
  auto sup = f.sup_abs;
  r.sup_abs = [=](const Window<Dim>& w, double) { return sup(w, std::abs(tau)); };
  r.t_independent = true;
  return r;
}

}  // namespace

Field1D truncate(const Field1D& f, int k) { return truncate_impl(f, k); }
Field2D truncate(const Field2D& f, int k) { return truncate_impl(f, k); }
Field1D freeze(const Field1D& f, double tau) { return freeze_impl(f, tau); }
Field2D freeze(const Field2D& f, double tau) { return freeze_impl(f, tau); }

}  // namespace pairlab

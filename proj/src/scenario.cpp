#include "pairlab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

namespace pairlab {

using nlohmann::json;

json to_json(const CheckReport& r) {
  return json{{"scenario", r.scenario}, {"check", r.check},         {"lhs", r.lhs},
              {"rhs", r.rhs},           {"residual", r.residual},   {"tolerance", r.tolerance},
              {"pass", r.pass},         {"diagnostics", r.diagnostics}};
}

namespace {

[[noreturn]] void spec_error(const std::string& what) { throw LabError(ErrorKind::SpecError, what); }

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) spec_error(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

double req(const json& j, const char* key) {
  if (!j.contains(key)) spec_error(std::string("missing '") + key + "'");
  return num(j, key, 0.0);
}

Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) spec_error("expected a pair [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<double> numbers(const json& j) {
  if (!j.is_array()) spec_error("expected an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(e.get<double>());
  return v;
}

AcPart parse_ac(const json& j) {
  if (j.is_number()) return ac_constant(j.get<double>());
  const std::string kind = j.value("kind", "");
  if (kind == "const") return ac_constant(num(j, "c", 0.0));
  if (kind == "linear") return ac_piecewise_linear(numbers(j.at("xs")), numbers(j.at("ys")));
  if (kind == "sin")
    return ac_sin(num(j, "amplitude", 1.0), num(j, "frequency", 1.0), num(j, "phase", 0.0), num(j, "offset", 0.0));
  if (kind == "poly") return ac_poly(numbers(j.at("coeffs")));
  if (kind == "tanh")
    return ac_tanh(num(j, "amplitude", 1.0), num(j, "center", 0.0), num(j, "width", 1.0), num(j, "offset", 0.0));
  if (kind == "sum") {
    std::vector<AcPart> parts;
    for (const auto& p : j.at("parts")) parts.push_back(parse_ac(p));
    return ac_sum(parts);
  }
  spec_error("unknown ac kind '" + kind + "'");
}

Profile parse_profile(const json& j) {
  const std::string p = j.value("profile", "bump");
  Profile pr;
  if (p == "bump")
    pr.kind = ProfileKind::Bump;
  else if (p == "plateau")
    pr.kind = ProfileKind::Plateau;
  else if (p == "poly")
    pr.kind = ProfileKind::Poly;
  else
    spec_error("unknown test-function profile '" + p + "'");
  pr.inner = num(j, "inner", 0.5);
  return pr;
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    spec_error(e.what());
  }
}

// ---------------------------------------------------------------------------
// sequences

Sequence1D build_sequence(const Scenario& s, const Setup1D& st) {
  const json spec = s.raw.value("sequence", json::object());
  const std::string gen = spec.value("generator", "mollified");
  if (s.eps.size() < 12) spec_error("sequence checks need an eps_schedule of at least 12 values");
  Sequence1D seq;
  if (gen == "mollified")
    seq = mollified_sequence(st.u, st.window, s.eps);
  else if (gen == "constant")
    seq = constant_sequence(st.u, st.window, static_cast<int>(s.eps.size()));
  else
    spec_error("unknown sequence generator '" + gen + "'");
  if (spec.contains("oscillation")) {
    const json& o = spec.at("oscillation");
    seq = oscillating_sequence(seq, num(o, "amplitude", 1.0), num(o, "frequency", 1.0));
  }
  if (spec.contains("spike")) {
    const json& o = spec.at("spike");
    seq = spike_sequence(seq, req(o, "x0"), num(o, "height", 1.0), num(o, "width", 0.1));
  }
  if (!s.mode.empty()) seq.mode = seq_mode_from_string(s.mode);
  return seq;
}

Sequence2D build_sequence(const Scenario& s, const Setup2D& st) {
  if (s.eps.size() < 12) spec_error("sequence checks need an eps_schedule of at least 12 values");
  Sequence2D seq = st.u.is_smooth() ? constant_sequence(st.u, st.window, static_cast<int>(s.eps.size()))
                                    : smoothed_disc_sequence(st.u, s.eps);
  if (!s.mode.empty()) seq.mode = seq_mode_from_string(s.mode);
  return seq;
}

// ---------------------------------------------------------------------------
// Borel windows for the mass bound

std::vector<Interval> mass_windows(const Setup1D& st) {
  const Interval& w = st.window;
  const double len = w.hi - w.lo;
  std::vector<Interval> out;
  for (int i = 0; i < 12; ++i) {
    const double lo = w.lo + len * (i % 6) / 8.0;
    const double hi = std::min(w.hi, lo + len * (0.05 + 0.15 * (i / 6 + 1) + 0.03 * i));
    out.push_back({lo, hi, i % 2 == 0, i % 3 == 0});
  }
  // windows ending exactly on jumps and on the Cantor carrier
  for (const auto& j : st.u.jumps()) {
    if (out.size() >= 18) break;
    out.push_back({j.x, std::min(w.hi, j.x + 0.1 * len), true, false});
    out.push_back({std::max(w.lo, j.x - 0.1 * len), j.x, false, false});
  }
  if (const auto& c = st.u.cantor()) out.push_back({c->c0, c->map(1.0 / 3.0), true, true});
  while (out.size() < 20) {
    const double k = static_cast<double>(out.size());
    out.push_back({w.lo + len * 0.37 * std::fmod(k * 0.618, 1.0), w.hi - len * 0.05 * std::fmod(k * 0.414, 1.0),
                   false, true});
  }
  out.resize(20);
  return out;
}

std::vector<Box> mass_windows(const Setup2D& st) {
  const Box& w = st.window;
  const Vec2 d = w.hi - w.lo;
  std::vector<Box> out;
  for (int i = 0; i < 20; ++i) {
    const double fx = std::fmod(0.618 * (i + 1), 1.0), fy = std::fmod(0.414 * (i + 1), 1.0);
    const double s = 0.15 + 0.04 * i;
    const Vec2 lo = w.lo + Vec2(fx * (1.0 - s) * d.x(), fy * (1.0 - s) * d.y());
    out.push_back({lo, lo + s * d});
  }
  return out;
}

// ---------------------------------------------------------------------------
// check implementations

struct Outcome {
  double lhs = 0.0, rhs = 0.0, residual = 0.0;
  bool pass = false;
  json diag = json::object();
};

Outcome fill(double lhs, double rhs, double residual, double tol) {
  Outcome o{lhs, rhs, residual, residual <= tol, json::object()};
  return o;
}

template <class Setup>
double blowup_oracle(const Setup& st, double theta, const json& params);

template <>
double blowup_oracle(const Setup1D& st, double theta, const json& params) {
  const double x0 = req(params, "x0");
  for (const auto& j : st.u.jumps()) {
    if (j.x != x0) continue;
    QuadOptions q;
    q.abs_tol = 1e-13;
    return integrate([&](double t) { return st.field(x0, t) * j.nu; }, j.u_minus, j.u_plus, st.field.tbreaks, q)
               .value /
           (j.u_plus - j.u_minus);
  }
  return theta;
}

template <>
double blowup_oracle(const Setup2D& st, double theta, const json& params) {
  const Vec2 x0 = vec2(params.at("x0"));
  if (st.u.is_smooth()) return theta;
  // the region boundary through x0: mean over (c0, v) of b(x0, t) . n_int, signed by the value order
  for (const auto& r : st.u.regions()) {
    const Vec2 n = interior_normal(r.shape, x0);
    if ((contains(r.shape, x0 + 1e-9 * n) == contains(r.shape, x0 - 1e-9 * n))) continue;
    const double lo = std::min(st.u.background(), r.value), hi = std::max(st.u.background(), r.value);
    const double sign = r.value > st.u.background() ? 1.0 : -1.0;
    QuadOptions q;
    q.abs_tol = 1e-13;
    return integrate([&](double t) { return sign * st.field(x0, t).dot(n); }, lo, hi, st.field.tbreaks, q).value /
           (hi - lo);
  }
  return theta;
}

Outcome check_impl(const Scenario& s, const CheckSpec& c, const Setup1D& st, double tol) {
  const Field1D& b = st.field;
  const BvFunction1D& u = st.u;
  const TestFunction1D& phi = st.phi;
  const PairingOptions opt{c.params.value("quad_tol", 1e-10)};
  const std::string& n = c.name;
  if (n == "two_route") {
    const auto d = pairing_distributional(b, u, phi, opt);
    const double r = pair(pairing_by_representation(b, u, opt), phi).value;
    const double t = pair(pairing_by_traces(b, u, opt), phi).value;
    Outcome o = fill(d.value, r, std::max(std::abs(d.value - r), std::abs(r - t)) / (1.0 + std::abs(d.value)), tol);
    o.diag = {{"traces", t}, {"double_form", d.double_form}};
    return o;
  }
  if (n == "coarea_pairing" || n == "coarea_variation") {
    const Comparison cmp = n == "coarea_pairing" ? coarea_pairing_check(b, u, phi, opt) : coarea_variation_check(b, u, phi, opt);
    Outcome o = fill(cmp.lhs, cmp.rhs, cmp.residual, tol);
    if (n == "coarea_variation" && s.raw.value("coarea_variation", "") == "inequality") {
      // only |mu| <= int |mu_t| dt survives where q(b_t, nu) changes sign on a jump
      o.pass = cmp.lhs <= cmp.rhs + tol;
      o.diag["relation"] = "inequality";
    }
    return o;
  }
  if (n == "chain_rule") {
    const auto cr = chain_rule_check(b, u, phi, opt);
    Outcome o = fill(cr.div_v, cr.pairing - cr.div_x_term, cr.residual, tol);
    o.diag = {{"div_x_term", cr.div_x_term}, {"pairing", cr.pairing}};
    return o;
  }
  if (n == "mass_bound") {
    const auto mu = pairing_by_representation(b, u, opt);
    Outcome o;
    int violations = 0;
    bool first = true;
    for (const Interval& e : mass_windows(st)) {
      const auto mb = mass_bound_check(b, u, mu, e);
      const double excess = mb.lhs - mb.bound;
      if (excess > tol * (1.0 + mb.bound)) ++violations;
      if (first || excess >= o.residual) {
        o.lhs = mb.lhs;
        o.rhs = mb.bound;
        o.residual = std::max(0.0, excess);
        first = false;
      }
    }
    o.diag = {{"windows", 20}, {"violations", violations}};
    o.pass = violations == 0;
    return o;
  }
  if (n == "lipschitz") {
    const double lo = u.min(), hi = u.max();
    Outcome o;
    o.pass = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (double tau : {lo - 0.5, lo, 0.5 * (lo + hi), hi, hi + 0.5}) {
      try {
        const auto lc = lipschitz_comparison_check(b, u, tau, phi, tol, opt);
        if (lc.lhs - lc.bound > worst) {
          worst = lc.lhs - lc.bound;
          o.lhs = lc.lhs;
          o.rhs = lc.bound;
        }
      } catch (const LabError& e) {
        if (e.kind() != ErrorKind::BoundViolated) throw;
        o.pass = false;
        o.diag["violation"] = e.what();
      }
    }
    o.residual = std::max(0.0, worst);
    o.diag["taus"] = 5;
    return o;
  }
  if (n == "cylinder") {
    std::mt19937_64 rng(c.params.value("seed", 20240601u));
    std::uniform_real_distribution<double> ux(st.window.lo, st.window.hi), ut(u.min() - 0.5, u.max() + 0.5);
    Outcome o;
    const int points = c.params.value("points", 50);
    for (int i = 0; i < points; ++i) {
      const double x = ux(rng), t = ut(rng), nu = (i % 2 == 0) ? 1.0 : -1.0;
      const auto q = cylindrical_average(b, t, nu, x);
      const double want = b(x, t) * nu;
      if (std::abs(q.value - want) >= o.residual) {
        o.residual = std::abs(q.value - want);
        o.lhs = q.value;
        o.rhs = want;
      }
    }
    o.diag["points"] = points;
    o.pass = o.residual <= tol;
    return o;
  }
  if (n == "approximation") {
    const auto tab = approximation_convergence_check(b, u, phi, s.eps, opt);
    Outcome o = fill(tab.rows.empty() ? tab.target : tab.rows.back().value, tab.target, tab.final_gap(), tol);
    o.diag["rows"] = tab.rows.size();
    return o;
  }
  if (n == "continuity") {
    const Sequence1D seq = build_sequence(s, st);
    const auto tab = continuity_check_Gphi(b, phi, seq, u, opt);
    Outcome o = fill(tab.rows.back().value, tab.target, tab.final_gap(), tol);
    o.diag = {{"mode", std::string(to_string(tab.mode))}, {"sup_linf", tab.sup_linf}, {"sup_tv", tab.sup_tv}};
    return o;
  }
  if (n == "lsc_F" || n == "lsc_Gplus") {
    const Sequence1D seq = build_sequence(s, st);
    const Functional f = n == "lsc_F" ? Functional::F : Functional::Gplus;
    try {
      const auto r = lsc_check(b, f, seq, u, st.window, tol);
      Outcome o{r.liminf, r.target, std::max(0.0, -r.margin), true, json::object()};
      o.diag = {{"margin", r.margin}, {"truncation_k", r.truncation_k}, {"extrapolated", r.extrapolated}, {"mode", std::string(to_string(seq.mode))}};
      return o;
    } catch (const LabError& e) {
      if (e.kind() != ErrorKind::InequalityViolated) throw;
      Outcome o;
      o.diag["error"] = e.what();
      o.residual = std::numeric_limits<double>::infinity();
      return o;
    }
  }
  if (n == "order") {
    const auto mu = pairing_by_representation(b, u, opt);
    const double f = functional_target(mu, Functional::F, st.window);
    const double gp = functional_target(mu, Functional::Gplus, st.window);
    const double g = functional_target(mu, Functional::G, st.window);
    const double viol = std::max({gp - f, std::max(g, 0.0) - gp, std::abs(g) - f, 0.0});
    Outcome o = fill(f, gp, viol, tol);
    o.diag = {{"F", f}, {"G+", gp}, {"G", g}};
    return o;
  }
  if (n == "relaxation") {
    try {
      const auto r = relaxation_check(b, u, phi, st.window, s.eps, tol);
      Outcome o = fill(r.liminf, r.target, r.gap, tol);
      o.diag["extrapolated"] = r.extrapolated;
      for (const auto& p : r.parts) o.diag["parts"].push_back({{"label", p.label}, {"value", p.value}, {"target", p.target}});
      return o;
    } catch (const LabError& e) {
      if (e.kind() != ErrorKind::GapAboveTolerance) throw;
      Outcome o;
      o.residual = std::numeric_limits<double>::infinity();
      o.diag["error"] = e.what();
      return o;
    }
  }
  if (n == "blowup") {
    const auto t = blowup_density(b, u, req(c.params, "x0"), num(c.params, "r0", 0.1));
    const double oracle = blowup_oracle(st, t.theta, c.params);
    Outcome o = fill(t.limit, oracle, std::abs(t.limit - oracle), tol);
    o.diag = {{"theta", t.theta}, {"converged", t.converged}};
    return o;
  }
  if (n == "truncation") {
    std::vector<int> ks{2, 3};
    if (c.params.contains("k")) ks = c.params.at("k").get<std::vector<int>>();
    Outcome o;
    for (int k : ks) {
      const auto tc = truncation_consistency(b, k, u, phi, opt);
      const auto si = sigma_k_identities(b, k, u);
      const double r = std::max({tc.residual, si.max_diffuse, si.max_jump});
      if (r >= o.residual) {
        o.residual = r;
        o.lhs = tc.lhs;
        o.rhs = tc.rhs;
      }
      o.diag["k" + std::to_string(k)] = {{"consistency", tc.residual}, {"diffuse", si.max_diffuse}, {"jump", si.max_jump}, {"samples", si.samples}};
    }
    o.pass = o.residual <= tol;
    return o;
  }
  throw LabError(ErrorKind::UnknownCheck, "check '" + n + "' is not available in one dimension");
}

Outcome check_impl(const Scenario& s, const CheckSpec& c, const Setup2D& st, double tol) {
  const Field2D& b = st.field;
  const BvFunction2D& u = st.u;
  const TestFunction2D& phi = st.phi;
  const PairingOptions opt{c.params.value("quad_tol", 1e-9)};
  const std::string& n = c.name;
  if (n == "two_route") {
    const auto d = pairing_distributional(b, u, phi, opt);
    const double r = pair(pairing_by_representation(b, u, opt), phi).value;
    const double t = pair(pairing_by_traces(b, u, opt), phi).value;
    Outcome o = fill(d.value, r, std::max(std::abs(d.value - r), std::abs(r - t)) / (1.0 + std::abs(d.value)), tol);
    o.diag = {{"traces", t}, {"double_form", d.double_form}};
    return o;
  }
  if (n == "coarea_pairing" || n == "coarea_variation") {
    const Comparison cmp = n == "coarea_pairing" ? coarea_pairing_check(b, u, phi, opt) : coarea_variation_check(b, u, phi, opt);
    Outcome o = fill(cmp.lhs, cmp.rhs, cmp.residual, tol);
    if (n == "coarea_variation" && s.raw.value("coarea_variation", "") == "inequality") {
      o.pass = cmp.lhs <= cmp.rhs + tol;
      o.diag["relation"] = "inequality";
    }
    return o;
  }
  if (n == "chain_rule") {
    const auto cr = chain_rule_check(b, u, phi, opt);
    Outcome o = fill(cr.div_v, cr.pairing - cr.div_x_term, cr.residual, tol);
    o.diag = {{"div_x_term", cr.div_x_term}, {"pairing", cr.pairing}};
    return o;
  }
  if (n == "mass_bound") {
    const auto mu = pairing_by_representation(b, u, opt);
    Outcome o;
    int violations = 0;
    bool first = true;
    for (const Box& e : mass_windows(st)) {
      const auto mb = mass_bound_check(b, u, mu, e);
      const double excess = mb.lhs - mb.bound;
      if (excess > tol * (1.0 + mb.bound)) ++violations;
      if (first || excess >= o.residual) {
        o.lhs = mb.lhs;
        o.rhs = mb.bound;
        o.residual = std::max(0.0, excess);
        first = false;
      }
    }
    o.diag = {{"windows", 20}, {"violations", violations}};
    o.pass = violations == 0;
    return o;
  }
  if (n == "lipschitz") {
    const double lo = u.min(), hi = u.max();
    Outcome o;
    o.pass = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (double tau : {lo - 0.5, lo, 0.5 * (lo + hi), hi, hi + 0.5}) {
      try {
        const auto lc = lipschitz_comparison_check(b, u, tau, phi, tol, opt);
        if (lc.lhs - lc.bound > worst) {
          worst = lc.lhs - lc.bound;
          o.lhs = lc.lhs;
          o.rhs = lc.bound;
        }
      } catch (const LabError& e) {
        if (e.kind() != ErrorKind::BoundViolated) throw;
        o.pass = false;
        o.diag["violation"] = e.what();
      }
    }
    o.residual = std::max(0.0, worst);
    o.diag["taus"] = 5;
    return o;
  }
  if (n == "cylinder") {
    std::mt19937_64 rng(c.params.value("seed", 20240601u));
    std::uniform_real_distribution<double> ux(st.window.lo.x(), st.window.hi.x()), uy(st.window.lo.y(), st.window.hi.y());
    std::uniform_real_distribution<double> ut(u.min() - 0.5, u.max() + 0.5), ua(0.0, 2.0 * std::numbers::pi);
    Outcome o;
    const int points = c.params.value("points", 50);
    for (int i = 0; i < points; ++i) {
      Vec2 x(ux(rng), uy(rng));
      const double t = ut(rng), a = ua(rng);
      if (b.singular && (x - *b.singular).norm() < 0.1) x = *b.singular + 0.1 * (x - *b.singular).normalized() + Vec2(0.05, 0.05);
      const Vec2 nu(std::cos(a), std::sin(a));
      const auto q = cylindrical_average(b, t, nu, x);
      const double want = b(x, t).dot(nu);
      if (std::abs(q.value - want) >= o.residual) {
        o.residual = std::abs(q.value - want);
        o.lhs = q.value;
        o.rhs = want;
      }
    }
    if (b.singular) {
      // odd symmetry about the singular point: the limit is 0 for every direction
      for (int i = 0; i < 4; ++i) {
        const double a = ua(rng);
        const auto q = cylindrical_average(b, ut(rng), Vec2(std::cos(a), std::sin(a)), *b.singular);
        o.residual = std::max(o.residual, std::abs(q.value));
        o.diag["singular"].push_back(q.value);
      }
    }
    o.diag["points"] = points;
    o.pass = o.residual <= tol;
    return o;
  }
  if (n == "approximation") {
    const auto tab = approximation_convergence_check(b, u, phi, s.eps, opt);
    Outcome o = fill(tab.rows.empty() ? tab.target : tab.rows.back().value, tab.target, tab.final_gap(), tol);
    o.diag["rows"] = tab.rows.size();
    return o;
  }
  if (n == "lsc_F" || n == "lsc_Gplus") {
    const Sequence2D seq = build_sequence(s, st);
    const Functional f = n == "lsc_F" ? Functional::F : Functional::Gplus;
    try {
      const auto r = lsc_check(b, f, seq, u, st.window, tol);
      Outcome o{r.liminf, r.target, std::max(0.0, -r.margin), true, json::object()};
      o.diag = {{"margin", r.margin}, {"truncation_k", r.truncation_k}, {"extrapolated", r.extrapolated}, {"mode", std::string(to_string(seq.mode))}};
      return o;
    } catch (const LabError& e) {
      if (e.kind() != ErrorKind::InequalityViolated) throw;
      Outcome o;
      o.diag["error"] = e.what();
      o.residual = std::numeric_limits<double>::infinity();
      return o;
    }
  }
  if (n == "order") {
    const auto mu = pairing_by_representation(b, u, opt);
    const double f = functional_target(mu, Functional::F, st.window);
    const double gp = functional_target(mu, Functional::Gplus, st.window);
    const double g = functional_target(mu, Functional::G, st.window);
    const double viol = std::max({gp - f, std::max(g, 0.0) - gp, std::abs(g) - f, 0.0});
    Outcome o = fill(f, gp, viol, tol);
    o.diag = {{"F", f}, {"G+", gp}, {"G", g}};
    return o;
  }
  if (n == "relaxation") {
    try {
      const auto r = relaxation_check(b, u, phi, st.window, s.eps, tol);
      Outcome o = fill(r.liminf, r.target, r.gap, tol);
      o.diag["extrapolated"] = r.extrapolated;
      return o;
    } catch (const LabError& e) {
      if (e.kind() != ErrorKind::GapAboveTolerance) throw;
      Outcome o;
      o.residual = std::numeric_limits<double>::infinity();
      o.diag["error"] = e.what();
      return o;
    }
  }
  if (n == "blowup") {
    const auto t = blowup_density(b, u, vec2(c.params.at("x0")), num(c.params, "r0", 0.1));
    const double oracle = blowup_oracle(st, t.theta, c.params);
    Outcome o = fill(t.limit, oracle, std::abs(t.limit - oracle), tol);
    o.diag = {{"theta", t.theta}, {"converged", t.converged}};
    return o;
  }
  throw LabError(ErrorKind::UnknownCheck, "check '" + n + "' is not available in two dimensions");
}

}  // namespace

// ---------------------------------------------------------------------------

Interval parse_interval(const json& j) {
  return guarded([&] {
    if (j.is_array() && j.size() == 2) return Interval{j[0].get<double>(), j[1].get<double>()};
    if (j.is_object()) return Interval{req(j, "lo"), req(j, "hi"), j.value("closed_lo", false), j.value("closed_hi", false)};
    spec_error("interval must be [lo, hi]");
  });
}

Box parse_box(const json& j) {
  return guarded([&] {
    if (!j.is_array() || j.size() != 2) spec_error("box must be [[x0, y0], [x1, y1]]");
    return Box{vec2(j[0]), vec2(j[1])};
  });
}

BvFunction1D parse_bv1d(const json& j) {
  return guarded([&] {
    if (j.value("kind", "bv1d") != "bv1d") spec_error("expected a bv1d function");
    const Interval d = parse_interval(j.at("domain"));
    const AcPart ac = j.contains("ac") ? parse_ac(j.at("ac")) : ac_constant(0.0);
    std::optional<CantorPart> cantor;
    if (j.contains("cantor")) {
      const json& c = j.at("cantor");
      cantor = CantorPart{CantorLadder{num(c, "removed_fraction", 1.0 / 3.0), c.value("depth", 12)}, num(c, "c0", 0.0),
                          num(c, "c1", 1.0), num(c, "scale", 1.0)};
    }
    if (j.contains("jump_sizes")) {
      std::vector<std::pair<double, double>> sizes;
      for (const auto& e : j.at("jump_sizes")) sizes.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
      return BvFunction1D::with_jump_sizes(d, ac, sizes, cantor);
    }
    std::vector<JumpPoint> jumps;
    for (const auto& e : j.value("jumps", json::array())) {
      if (!e.is_array() || e.size() != 4) spec_error("jumps are [x, u_minus, u_plus, nu]");
      jumps.push_back({e[0].get<double>(), e[1].get<double>(), e[2].get<double>(), e[3].get<int>()});
    }
    return BvFunction1D(d, ac, jumps, cantor);
  });
}

BvFunction2D parse_bv2d(const json& j) {
  return guarded([&] {
    if (j.value("kind", "bv2d") != "bv2d") spec_error("expected a bv2d function");
    const Box d = parse_box(j.at("domain"));
    if (j.contains("smooth")) {
      const json& s = j.at("smooth");
      const std::string kind = s.value("kind", "");
      if (kind == "gaussian")
        return BvFunction2D::smooth(d, gaussian_surface(vec2(s.value("center", json::array({0.0, 0.0}))),
                                                         num(s, "width", 1.0), num(s, "amplitude", 1.0), num(s, "offset", 0.0)));
      if (kind == "grid")
        return BvFunction2D::smooth(d, grid_surface(numbers(s.at("xs")), numbers(s.at("ys")), numbers(s.at("values"))));
      spec_error("unknown smooth surface kind '" + kind + "'");
    }
    std::vector<Region> regions;
    for (const auto& r : j.value("regions", json::array())) {
      const std::string shape = r.value("shape", "");
      if (shape == "disc") {
        regions.push_back({Disc{vec2(r.at("center")), req(r, "radius")}, req(r, "value")});
      } else if (shape == "polygon") {
        std::vector<Vec2> v;
        for (const auto& p : r.at("vertices")) v.push_back(vec2(p));
        regions.push_back({make_polygon(v), req(r, "value")});
      } else {
        spec_error("unknown region shape '" + shape + "'");
      }
    }
    return BvFunction2D::piecewise_constant(d, num(j, "background", 0.0), regions);
  });
}

TestFunction1D parse_phi1d(const json& j) {
  return guarded([&] {
    return TestFunction1D{parse_profile(j), req(j, "center"), req(j, "half_width"), num(j, "amplitude", 1.0)};
  });
}

TestFunction2D parse_phi2d(const json& j) {
  return guarded([&] {
    const Vec2 hw = j.at("half_width").is_number() ? Vec2::Constant(j.at("half_width").get<double>()) : vec2(j.at("half_width"));
    return TestFunction2D{parse_profile(j), vec2(j.at("center")), hw, num(j, "amplitude", 1.0)};
  });
}

std::vector<double> parse_schedule(const json& j) {
  return guarded([&] {
    if (j.is_array()) return numbers(j);
    return geometric_schedule(req(j, "eps0"), j.value("n", 12), num(j, "ratio", 0.5));
  });
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "two_route", "coarea_pairing", "coarea_variation", "chain_rule", "mass_bound", "lipschitz", "cylinder",
      "approximation", "continuity", "lsc_F", "lsc_Gplus", "order", "relaxation", "blowup", "truncation"};
  return names;
}

double default_tolerance(const std::string& check) {
  if (check == "two_route" || check == "coarea_pairing" || check == "approximation" || check == "lsc_F" ||
      check == "lsc_Gplus" || check == "truncation")
    return 1e-6;
  if (check == "coarea_variation" || check == "continuity") return 1e-5;
  if (check == "chain_rule" || check == "lipschitz" || check == "order") return 1e-8;
  if (check == "mass_bound") return 1e-9;
  if (check == "cylinder") return 1e-7;
  if (check == "relaxation") return 1e-4;
  if (check == "blowup") return 1e-3;
  throw LabError(ErrorKind::UnknownCheck, "unknown check '" + check + "'");
}

Scenario parse_scenario(const json& j) {
  return guarded([&] {
    if (!j.is_object()) spec_error("scenario must be a JSON object");
    Scenario s;
    s.raw = j;
    s.id = j.at("scenario_id").get<std::string>();
    s.description = j.value("description", "");
    for (const char* key : {"field", "bv", "phi", "window"})
      if (!j.contains(key)) spec_error(std::string("scenario '") + s.id + "' lacks '" + key + "'");
    const std::string kind = j.at("bv").value("kind", "");
    if (kind == "bv1d")
      s.dim = 1;
    else if (kind == "bv2d")
      s.dim = 2;
    else
      spec_error("bv.kind must be bv1d or bv2d");
    s.mode = j.value("mode", "");
    if (!s.mode.empty()) seq_mode_from_string(s.mode);
    if (j.contains("eps_schedule")) s.eps = parse_schedule(j.at("eps_schedule"));
    for (const auto& c : j.value("checks", json::array())) {
      CheckSpec cs;
      if (c.is_string()) {
        cs.name = c.get<std::string>();
      } else {
        cs.name = c.at("name").get<std::string>();
        cs.tolerance = num(c, "tolerance", 0.0);
        cs.params = c;
      }
      if (std::find(known_checks().begin(), known_checks().end(), cs.name) == known_checks().end())
        throw LabError(ErrorKind::UnknownCheck, "scenario '" + s.id + "': unknown check '" + cs.name + "'");
      if (cs.tolerance < 0.0) spec_error("tolerances must be positive");
      s.checks.push_back(cs);
    }
    return s;
  });
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) spec_error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    spec_error(path + ": " + e.what());
  }
  return parse_scenario(j);
}

std::variant<Setup1D, Setup2D> setup(const Scenario& s) {
  const json& j = s.raw;
  if (s.dim == 1) {
    BvFunction1D u = parse_bv1d(j.at("bv"));
    Field1D f = make_field_1d(j.at("field"), u.domain());
    return Setup1D{std::move(f), std::move(u), parse_phi1d(j.at("phi")), parse_interval(j.at("window"))};
  }
  BvFunction2D u = parse_bv2d(j.at("bv"));
  Field2D f = make_field_2d(j.at("field"), u.domain());
  return Setup2D{std::move(f), std::move(u), parse_phi2d(j.at("phi")), parse_box(j.at("window"))};
}

CheckReport run_check(const Scenario& s, const CheckSpec& c, double tol_scale) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckReport r;
  r.scenario = s.id;
  r.check = c.name;
  r.tolerance = (c.tolerance > 0.0 ? c.tolerance : default_tolerance(c.name)) * tol_scale;
  try {
    const auto st = setup(s);
    const Outcome o = std::visit([&](const auto& x) { return check_impl(s, c, x, r.tolerance); }, st);
    r.lhs = o.lhs;
    r.rhs = o.rhs;
    r.residual = o.residual;
    r.pass = o.pass && std::isfinite(o.residual);
    r.diagnostics = o.diag;
  } catch (const LabError& e) {
    if (e.kind() == ErrorKind::SpecError || e.kind() == ErrorKind::UnknownCheck) throw;
    r.pass = false;
    r.residual = std::numeric_limits<double>::infinity();
    r.diagnostics["error"] = std::string(to_string(e.kind()));
    r.diagnostics["message"] = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CheckReport> run_scenario(const Scenario& s, double tol_scale) {
  std::vector<CheckReport> out;
  for (const auto& c : s.checks) out.push_back(run_check(s, c, tol_scale));
  return out;
}

Series emit_series(const Scenario& s, const std::string& check) {
  if (std::find(known_checks().begin(), known_checks().end(), check) == known_checks().end())
    throw LabError(ErrorKind::UnknownCheck, "unknown check '" + check + "'");
  CheckSpec spec{check, 0.0, json::object()};
  for (const auto& c : s.checks)
    if (c.name == check) spec = c;
  Series out{"parameter", "value", {}};
  const auto st = setup(s);
  if (check == "approximation") {
    out = {"eps", "gap", {}};
    std::visit(
        [&](const auto& x) {
          for (const auto& row : approximation_convergence_check(x.field, x.u, x.phi, s.eps).rows)
            out.rows.emplace_back(row.parameter, row.gap);
        },
        st);
  } else if (check == "relaxation") {
    out = {"eps", "value", {}};
    std::visit(
        [&](const auto& x) {
          for (const auto& row : relaxation_check(x.field, x.u, x.phi, x.window, s.eps, 1e300).rows)
            out.rows.emplace_back(row.parameter, row.value);
        },
        st);
  } else if (check == "blowup") {
    out = {"r", "quotient", {}};
    if (const auto* x = std::get_if<Setup1D>(&st)) {
      for (const auto& row : blowup_density(x->field, x->u, req(spec.params, "x0"), num(spec.params, "r0", 0.1)).rows)
        out.rows.emplace_back(row.parameter, row.value);
    } else {
      const auto& y = std::get<Setup2D>(st);
      for (const auto& row : blowup_density(y.field, y.u, vec2(spec.params.at("x0")), num(spec.params, "r0", 0.1)).rows)
        out.rows.emplace_back(row.parameter, row.value);
    }
  } else if (check == "continuity") {
    out = {"parameter", "gap", {}};
    const auto& x = std::get<Setup1D>(st);
    for (const auto& row : continuity_check_Gphi(x.field, x.phi, build_sequence(s, x), x.u).rows)
      out.rows.emplace_back(row.parameter, row.gap);
  } else if (check == "lsc_F" || check == "lsc_Gplus") {
    const Functional f = check == "lsc_F" ? Functional::F : Functional::Gplus;
    std::visit(
        [&](const auto& x) {
          for (const auto& row : lsc_check(x.field, f, build_sequence(s, x), x.u, x.window, 1e300).rows)
            out.rows.emplace_back(row.parameter, row.value);
        },
        st);
  }
  return out;
}

}  // namespace pairlab

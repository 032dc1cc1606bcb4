#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pairlab/pairing.hpp"

using namespace pairlab;
using nlohmann::json;

namespace {

const Interval kLine{-1.0, 2.0};
const Box kSquare{Vec2(-2, -2), Vec2(2, 2)};

Field1D identity_1d(const Interval& d) {
  return make_field_1d(
      json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "affine"}, {"c0", 0.0}, {"c1", 1.0}}}}}}, d);
}

BvFunction1D step(const Interval& d, double a, double b, double height = 1.0) {
  return BvFunction1D::with_jump_sizes(d, ac_constant(0.0), {{a, height}, {b, -height}});
}

TestFunction1D plateau(double c, double h, double inner) { return {{ProfileKind::Plateau, inner}, c, h, 1.0}; }

BvFunction1D mixed() {
  return BvFunction1D::with_jump_sizes({-0.5, 1.5}, ac_sin(0.3, 1.0, 0.2), {{-0.2, 0.6}, {1.2, -0.9}},
                                       CantorPart{CantorLadder{1.0 / 3.0, 12}, 0.0, 1.0, 0.8});
}

}  // namespace

TEST_CASE("unit field on an interval indicator") {
  const auto b = make_field_1d(json{{"kind", "constant"}, {"params", {{"c", 1.0}}}}, kLine);
  const auto u = step(kLine, 0.0, 1.0);
  const TestFunction1D phi{{}, 0.0, 0.5, 1.0};
  const auto d = pairing_distributional(b, u, phi);
  CHECK(d.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.double_form == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pair(pairing_by_representation(b, u), phi).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pair(pairing_by_traces(b, u), phi).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("x t against a jump of height two") {
  const Interval d{0.0, 3.0};
  const auto b = make_field_1d(json{{"kind", "product"}, {"t_bound", 4.0}}, d);
  const auto u = BvFunction1D::with_jump_sizes(d, ac_constant(0.0), {{1.0, 2.0}});
  const TestFunction1D phi{{}, 1.0, 0.5, 1.0};
  CHECK(pairing_distributional(b, u, phi).value == doctest::Approx(2.0).epsilon(1e-10));
  const auto rep = pairing_by_representation(b, u);
  REQUIRE(rep.theta_jump.size() == 1);
  CHECK(rep.theta_jump[0] == doctest::Approx(1.0));  // mean of t over (0,2)
  CHECK(pair(rep, phi).value == doctest::Approx(2.0).epsilon(1e-12));

  // Lipschitz comparison against the frozen field: |2 - 2 tau| <= 3 int_0^2 |t - tau| dt
  for (double tau : {-1.0, 0.0, 0.5, 1.0, 3.0}) {
    const auto lc = lipschitz_comparison_check(b, u, tau, phi);
    CHECK(lc.lhs == doctest::Approx(std::abs(2.0 - 2.0 * tau)).epsilon(1e-9));
    const double m = tau <= 0 ? 2.0 - 2.0 * tau : (tau >= 2 ? 2.0 * tau - 2.0 : 0.5 * (tau * tau + (2 - tau) * (2 - tau)));
    CHECK(lc.bound == doctest::Approx(3.0 * m).epsilon(1e-9));
  }
}

TEST_CASE("Gauss-Green in one dimension") {
  const auto b = identity_1d(kLine);
  const auto u = step(kLine, 0.0, 1.0);
  const auto phi = plateau(0.5, 1.2, 0.9);
  CHECK(pairing_distributional(b, u, phi).value == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(pair(pairing_by_representation(b, u), phi).value == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pair_variation(pairing_by_representation(b, u), phi).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unit field against the Cantor ladder") {
  const auto b = make_field_1d(json{{"kind", "constant"}, {"params", {{"c", 1.0}}}}, {-0.5, 1.5});
  const BvFunction1D u({-0.5, 1.5}, ac_constant(0.0), {}, CantorPart{CantorLadder{1.0 / 3.0, 12}, 0.0, 1.0, 1.0});
  const auto phi = plateau(0.5, 0.9, 0.6);
  CHECK(pairing_distributional(b, u, phi).value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pair(pairing_by_representation(b, u), phi).value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pair(pairing_by_traces(b, u), phi).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("routes agree on a mixed function") {
  const auto b = make_field_1d(
      json{{"kind", "separable"},
           {"params", {{"g", {{"kind", "sin"}, {"amplitude", 1.0}, {"omega", 1.5}}}, {"a", {{"kind", "tanh"}, {"width", 0.5}}}}}},
      {-0.5, 1.5});
  const auto u = mixed();
  const TestFunction1D phi{{}, 0.5, 0.95, 1.0};
  const double d = pairing_distributional(b, u, phi).value;
  const auto rep = pairing_by_representation(b, u);
  const auto tr = pairing_by_traces(b, u);
  CHECK(pair(rep, phi).value == doctest::Approx(d).epsilon(1e-8));
  CHECK_NOTHROW(cross_validate(rep, tr, phi, 1e-8));
}

TEST_CASE("identities in one dimension") {
  const auto b = make_field_1d(json{{"kind", "sin_shift"}, {"params", {{"amplitude", 0.8}}}}, {-0.5, 1.5});
  const auto u = mixed();
  const TestFunction1D phi{{}, 0.6, 0.8, 1.0};
  const auto cp = coarea_pairing_check(b, u, phi);
  CHECK(cp.residual < 1e-7);
  const auto cv = coarea_variation_check(b, u, phi);
  CHECK(cv.residual < 1e-6);
  CHECK(chain_rule_check(b, u, phi).residual < 1e-9);
  const auto rep = pairing_by_representation(b, u);
  for (const Interval e : {Interval{-0.3, 0.4, true, true}, Interval{-0.2, 1.2, false, true}, Interval{0.1, 0.2, true, false}}) {
    const auto mb = mass_bound_check(b, u, rep, e);
    CHECK(mb.lhs <= mb.bound * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("cylindrical averages") {
  const auto b = make_field_1d(json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "tanh"}, {"width", 0.3}}}}}}, kLine);
  const auto c = cylindrical_average(b, 0.0, 1.0, 0.0);
  CHECK(c.converged);
  CHECK(std::abs(c.value) < 1e-12);
  const auto s = cylindrical_average(b, 0.0, -1.0, 0.37);
  CHECK(std::abs(s.value + b(0.37, 0.0)) < 1e-7);

  const auto r = make_field_2d(json{{"kind", "radial2d"}}, kSquare);
  const auto rc = cylindrical_average(r, 1.0, Vec2(1, 0), Vec2::Zero());
  CHECK(rc.converged);
  CHECK(std::abs(rc.value) < 1e-7);
  const auto g = make_field_2d(json{{"kind", "sin_shift"}}, kSquare);
  const Vec2 p(0.3, -0.4), n = Vec2(1, 2).normalized();
  CHECK(std::abs(cylindrical_average(g, 0.7, n, p).value - g(p, 0.7).dot(n)) < 1e-7);
}

TEST_CASE("identity field on the unit disc") {
  const auto b = make_field_2d(json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "identity"}}}}}}, kSquare);
  const auto u = BvFunction2D::piecewise_constant(kSquare, 0.0, {{Disc{Vec2::Zero(), 1.0}, 1.0}});
  const TestFunction2D phi{{ProfileKind::Plateau, 0.7}, Vec2::Zero(), Vec2(1.8, 1.8), 1.0};
  const double want = -2.0 * std::numbers::pi;
  CHECK(pairing_distributional(b, u, phi, {1e-9}).value == doctest::Approx(want).epsilon(1e-8));
  const auto rep = pairing_by_representation(b, u);
  CHECK(pair(rep, phi).value == doctest::Approx(want).epsilon(1e-9));
  CHECK(pair(pairing_by_traces(b, u), phi).value == doctest::Approx(want).epsilon(1e-9));
  CHECK(rep.theta_surface[0](Vec2(0.6, 0.8)) == doctest::Approx(-1.0));
}

TEST_CASE("two dimensional identities on a polygon") {
  const auto b = make_field_2d(json{{"kind", "sin_shift"}, {"params", {{"amplitude", 0.6}}}}, kSquare);
  const Polygon tri = make_polygon({Vec2(-0.8, -0.6), Vec2(0.9, -0.5), Vec2(0.1, 0.9)});
  const auto u = BvFunction2D::piecewise_constant(kSquare, 0.5, {{tri, 2.0}, {Disc{Vec2(1.3, 0.2), 0.3}, -1.0}});
  const TestFunction2D phi{{}, Vec2(0.1, 0.0), Vec2(1.1, 1.0), 1.0};
  PairingOptions opt{1e-9};
  const double d = pairing_distributional(b, u, phi, opt).value;
  const auto rep = pairing_by_representation(b, u);
  CHECK(pair(rep, phi).value == doctest::Approx(d).epsilon(1e-7));
  CHECK_NOTHROW(cross_validate(rep, pairing_by_traces(b, u), phi, 1e-8));
  CHECK(coarea_pairing_check(b, u, phi, opt).residual < 1e-6);
  // b_t . n changes sign for t between the region values: only <= survives.
  const auto cv = coarea_variation_check(b, u, phi, opt);
  CHECK(cv.lhs <= cv.rhs + 1e-9);
  CHECK(cv.residual > 1e-3);
  CHECK(chain_rule_check(b, u, phi, opt).residual < 1e-8);
}

TEST_CASE("variation coarea on the disc") {
  const auto b = make_field_2d(json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "identity"}}}}}}, kSquare);
  const auto u = BvFunction2D::piecewise_constant(kSquare, 0.0, {{Disc{Vec2::Zero(), 1.0}, 3.0}});
  const TestFunction2D phi{{}, Vec2(0.2, 0.0), Vec2(1.5, 1.5), 1.0};
  const auto cv = coarea_variation_check(b, u, phi, {1e-9});
  CHECK(cv.residual < 1e-7);
}

TEST_CASE("variation coarea fails where q(b_t, nu) changes sign across a jump") {
  // b(x,t) = t - 1, u jumps from 0 to 2 at 0: the jump mass int_0^2 (t-1) dt vanishes
  // while int_0^2 |t - 1| dt = 1.
  const auto b = make_field_1d(
      json{{"kind", "separable"}, {"params", {{"g", {{"kind", "linear"}, {"c0", -1.0}, {"c1", 1.0}}}, {"a", "const"}}}}, kLine);
  const auto u = BvFunction1D::with_jump_sizes(kLine, ac_constant(0.0), {{0.0, 2.0}});
  const TestFunction1D phi{{}, 0.0, 0.5, 1.0};
  CHECK(std::abs(pairing_distributional(b, u, phi).value) < 1e-12);
  const auto cv = coarea_variation_check(b, u, phi);
  CHECK(std::abs(cv.lhs) < 1e-12);
  CHECK(cv.rhs == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(coarea_pairing_check(b, u, phi).residual) < 1e-10);
}

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pairlab/fields.hpp"

using namespace pairlab;
using nlohmann::json;

namespace {

const Interval kLine{-2.0, 3.0};
const Box kSquare{Vec2(-2, -2), Vec2(2, 2)};

}  // namespace

TEST_CASE("constant field") {
  const auto f = make_field_1d(json{{"kind", "constant"}, {"params", {{"c", 2.5}}}}, kLine);
  CHECK(f(0.3, 7.0) == 2.5);
  CHECK(f.div(0.3, 7.0) == 0.0);
  CHECK(f.primitive(0.3, -2.0) == -5.0);
  CHECK(f.lipschitz == 0.0);
  CHECK(f.t_independent);
  CHECK(f(5.0, 1.0) == 0.0);  // extended by zero
}

TEST_CASE("product field closed forms") {
  const auto f = make_field_1d(json{{"kind", "product"}, {"t_bound", 4.0}}, kLine);
  CHECK(f(1.5, 2.0) == 3.0);
  CHECK(f.div(1.5, 2.0) == 2.0);
  CHECK(f.primitive(1.5, 2.0) == doctest::Approx(3.0));
  CHECK(f.div_primitive(1.5, 2.0) == doctest::Approx(2.0));
  CHECK(f.sigma(0.7) == 4.0);
  CHECK(f.lipschitz == 3.0);
  CHECK(f.sup_abs({0.5, 1.0, true, true}, 2.0) == 2.0);

  const auto g = make_field_2d(json{{"kind", "product"}, {"t_bound", 2.0}}, kSquare);
  CHECK(g.div(Vec2(0.3, 0.1), 1.5) == 3.0);
  CHECK((g.primitive(Vec2(1, -1), 2.0) - Vec2(2, -2)).norm() < 1e-15);
}

TEST_CASE("radial field: sigma is locally integrable") {
  const auto f = make_field_2d(json{{"kind", "radial2d"}}, kSquare);
  REQUIRE(f.singular.has_value());
  QuadOptions q;
  q.abs_tol = 1e-11;
  const double r = integrate_area(Disc{Vec2::Zero(), 1.0}, [&](const Vec2& p) { return f.sigma(p); }, *f.singular, q).value;
  CHECK(r == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-10));
  CHECK((f(Vec2(3e-3, -4e-3), 9.0) - Vec2(0.6, -0.8)).norm() < 1e-14);
}

TEST_CASE("sampled assumption properties") {
  const json specs[] = {
      json{{"kind", "sin_shift"}, {"params", {{"amplitude", 0.7}}}},
      json{{"kind", "separable"},
           {"params", {{"g", {{"kind", "sin"}, {"amplitude", 1.3}, {"omega", 2.0}}}, {"a", {{"kind", "tanh"}, {"width", 0.4}}}}}},
      json{{"kind", "separable"}, {"params", {{"g", {{"kind", "tanh"}, {"width", 0.5}}}, {"a", {{"kind", "sin"}, {"k", 3.0}}}}}},
  };
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> xd(kLine.lo, kLine.hi), td(-6.0, 6.0);
  for (const auto& spec : specs) {
    const auto f = make_field_1d(spec, kLine);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
      const double x = xd(rng), t = td(rng), s = td(rng);
      if (std::abs(f(x, t) - f(x, s)) > f.lipschitz * std::abs(t - s) * (1.0 + 1e-12) + 1e-15) ++violations;
      if (std::abs(f.div(x, t)) > f.sigma(x) * (1.0 + 1e-12) + 1e-15) ++violations;
      QuadOptions q;
      q.abs_tol = 1e-12;
      const double lo = std::min(s, t), hi = std::max(s, t);
      const double quad = integrate([&](double r) { return f(x, r); }, lo, hi, q).value * (t >= s ? 1.0 : -1.0);
      if (std::abs(f.primitive(x, t) - f.primitive(x, s) - quad) > 1e-10) ++violations;
    }
    CHECK(violations == 0);
  }
  const auto g = make_field_2d(json{{"kind", "sin_shift"}}, kSquare);
  std::uniform_real_distribution<double> pd(-2.0, 2.0);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 x(pd(rng), pd(rng));
    const double t = td(rng);
    if (std::abs(g.div(x, t)) > g.sigma(x) * (1.0 + 1e-12) + 1e-15) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("declared constants that are too small are rejected") {
  CHECK_THROWS_AS(make_field_1d(json{{"kind", "product"}, {"L", 1.0}}, kLine), LabError);
  try {
    make_field_1d(json{{"kind", "sin_shift"}, {"L", 0.5}}, kLine);
    FAIL("expected an assumption violation");
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::AssumptionViolation);
  }
  CHECK_THROWS_AS(make_field_2d(json{{"kind", "radial2d"}, {"M", 0.5}}, kSquare), LabError);
  CHECK_THROWS_AS(make_field_1d(json{{"kind", "vortex"}}, kLine), LabError);
}

TEST_CASE("mollification") {
  const auto c = make_field_1d(json{{"kind", "constant"}, {"params", {{"c", -1.25}}}}, kLine);
  const auto mc = mollify(c, 0.3, {-1.0, 1.0});
  CHECK(mc(0.2, 1.0) == doctest::Approx(-1.25).epsilon(1e-15));

  const auto id = make_field_1d(
      json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "affine"}, {"c0", 0.0}, {"c1", 1.0}}}}}}, kLine);
  const auto mid = mollify(id, 0.25, {-1.0, 1.0});
  for (double x : {-0.9, 0.0, 0.37}) CHECK(mid(x, 0.0) == doctest::Approx(x).epsilon(1e-14));

  CHECK_THROWS_AS(mollify(id, 1.5, {-1.0, 1.0}), LabError);

  // Away from the centre the radial field is smooth: error O(eps^2).
  const auto rad = make_field_2d(json{{"kind", "radial2d"}}, kSquare);
  const Vec2 x(0.8, 0.6);
  const Box w{Vec2(0.5, 0.3), Vec2(1.1, 0.9)};
  const double e1 = (mollify(rad, 0.1, w)(x, 0.0) - rad(x, 0.0)).norm();
  const double e2 = (mollify(rad, 0.05, w)(x, 0.0) - rad(x, 0.0)).norm();
  CHECK(e1 < 0.1 * 0.1);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));

  // Div of the mollification is the mollified Div.
  const auto s = make_field_2d(json{{"kind", "sin_shift"}}, kSquare);
  const auto ms = mollify(s, 0.2, {Vec2(-1, -1), Vec2(1, 1)});
  const auto fd = centered_divergence(ms.eval, 1.0);
  for (const Vec2& p : {Vec2(0.1, 0.2), Vec2(-0.7, 0.4)}) CHECK(ms.div(p, 0.9) == doctest::Approx(fd(p, 0.9)).epsilon(1e-8));
  for (const Vec2& p : {Vec2(0.1, 0.2), Vec2(-0.7, 0.4)}) CHECK(std::abs(ms.div(p, 0.9)) <= ms.sigma(p));
}

TEST_CASE("sigma_k truncation") {
  CHECK(sigma_k(3, 1.9) == 1.0);
  CHECK(sigma_k(3, -2.0) == 1.0);
  CHECK(sigma_k(3, 2.5) == 0.5);
  CHECK(sigma_k(3, -3.5) == 0.0);
  CHECK(sigma_k_primitive(2, 3.0) == 1.5);
  CHECK(sigma_k_primitive(2, -1.5) == doctest::Approx(-1.375));

  const auto f = make_field_1d(json{{"kind", "product"}, {"t_bound", 4.0}}, kLine);
  const auto fk = truncate(f, 2);
  CHECK(fk(1.3, 0.8) == f(1.3, 0.8));
  CHECK(fk(1.3, -1.0) == f(1.3, -1.0));
  CHECK(fk(1.3, 2.0) == 0.0);
  CHECK(fk(1.3, -2.7) == 0.0);
  CHECK(fk(1.3, 1.5) == doctest::Approx(0.5 * f(1.3, 1.5)));
  // x * int_0^2 sigma_2(s) s ds = 7x/6
  CHECK(fk.primitive(1.3, 3.0) == doctest::Approx(7.0 * 1.3 / 6.0).epsilon(1e-12));
  CHECK(fk.primitive(1.3, -3.0) == doctest::Approx(7.0 * 1.3 / 6.0).epsilon(1e-12));
  CHECK(fk.div_primitive(1.3, 3.0) == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
  CHECK(fk.sigma(0.4) == f.sigma(0.4));

  const auto r = make_field_2d(json{{"kind", "radial2d"}}, kSquare);
  const auto rk = truncate(r, 3);
  CHECK((rk.primitive(Vec2(0, 1), 5.0) - 2.5 * Vec2(0, 1)).norm() < 1e-15);
}

TEST_CASE("frozen field") {
  const auto f = make_field_1d(json{{"kind", "product"}, {"t_bound", 4.0}}, kLine);
  const auto f2 = freeze(f, 2.0);
  CHECK(f2(1.5, -7.0) == 3.0);
  CHECK(f2.primitive(1.5, 0.5) == 1.5);
  CHECK(f2.t_independent);
}

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "pairlab/measures.hpp"

using namespace pairlab;

namespace {

// Second moment of the self-similar ladder measure from the two-map IFS
// x -> r x, x -> r x + (1 - r): E[X^2] = r^2 E[X^2] + (1-r) r E[X] + (1-r)^2/2
// averaged over both maps, with E[X] = 1/2.
double ifs_second_moment(double removed) {
  const double r = 0.5 * (1.0 - removed);
  return (r * (1.0 - r) * 0.5 + 0.5 * (1.0 - r) * (1.0 - r)) / (1.0 - r * r);
}

RadonMeasure1D cantor_measure(int depth, double scale = 1.0) {
  RadonMeasure1D m;
  m.domain = {0.0, 1.0};
  m.ladder = LadderPart{CantorLadder{1.0 / 3.0, depth}, 0.0, 1.0, scale, {}};
  return m;
}

}  // namespace

TEST_CASE("zero measure integrates to zero") {
  RadonMeasure1D m;
  m.domain = {0.0, 1.0};
  CHECK(integrate(m, [](double x) { return std::exp(x); }).value == 0.0);
}

TEST_CASE("atom evaluation") {
  RadonMeasure1D m;
  m.domain = {0.0, 1.0};
  m.atoms = {{0.5, 2.0}};
  CHECK(integrate(m, [](double x) { return x; }).value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ladder moments") {
  const auto m = cantor_measure(12);
  CHECK(integrate(m, [](double x) { return x; }).value == doctest::Approx(0.5).epsilon(1e-14));
  const double oracle = ifs_second_moment(1.0 / 3.0);
  CHECK(oracle == doctest::Approx(0.375).epsilon(1e-15));
  const auto deep = cantor_measure(20);
  CHECK(std::abs(integrate(deep, [](double x) { return x * x; }).value - oracle) < 1e-12);
  // Other removed fraction.
  RadonMeasure1D q = deep;
  q.ladder->ladder.removed_fraction = 0.5;
  CHECK(std::abs(integrate(q, [](double x) { return x * x; }).value - ifs_second_moment(0.5)) < 1e-12);
}

TEST_CASE("ladder depth convergence for Lipschitz integrands") {
  auto g = [](double x) { return std::sin(3.0 * x) + std::abs(x - 0.4); };
  for (int d : {8, 12, 16}) {
    const double a = integrate(cantor_measure(d), g).value;
    const double b = integrate(cantor_measure(d + 4), g).value;
    CHECK(std::abs(a - b) <= 4.0 * std::pow(2.0 / 3.0, d));
  }
}

TEST_CASE("variation") {
  RadonMeasure1D m;
  m.domain = {0.0, 1.0};
  m.atoms = {{0.0, 1.0}, {1.0, -1.0}};
  CHECK(total_mass(variation(m)) == doctest::Approx(2.0));
  CHECK(total_mass(variation(cantor_measure(10, -3.0))) == doctest::Approx(3.0));
  RadonMeasure1D s;
  s.domain = {0.0, std::numbers::pi};
  s.ac = [](double x) { return std::cos(x); };
  s.ac_breaks = {0.5 * std::numbers::pi};
  // Closed form: integral of |cos| over [0, pi] is 2.
  CHECK(std::abs(total_mass(variation(s)) - 2.0) < 1e-9);
  CHECK(total_mass(variation(s)) >= std::abs(total_mass(s)));
}

TEST_CASE("restriction conventions") {
  RadonMeasure1D d;
  d.domain = {-1.0, 1.0};
  d.atoms = {{0.0, 1.0}};
  CHECK(total_mass(restrict(d, Interval{0.0, 1.0})) == 1.0);
  CHECK(total_mass(restrict(d, Interval{0.0, 1.0, false, false})) == 0.0);
  const auto empty = restrict(d, Interval{5.0, 6.0});
  CHECK(empty.empty_restriction);
  CHECK(total_mass(empty) == 0.0);
  RadonMeasure1D leb;
  leb.domain = {0.0, 2.0};
  leb.ac = [](double) { return 1.0; };
  CHECK(total_mass(restrict(leb, Interval{0.0, 1.0})) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("linearity and sup bound") {
  RadonMeasure1D m = cantor_measure(12, 0.7);
  m.ac = [](double x) { return x - 0.3; };
  m.atoms = {{0.25, -0.4}, {0.9, 1.1}};
  auto g = [](double x) { return std::cos(5 * x); };
  auto h = [](double x) { return x * x; };
  const double lhs = integrate(m, [&](double x) { return 2.0 * g(x) - 3.0 * h(x); }).value;
  const double rhs = 2.0 * integrate(m, g).value - 3.0 * integrate(m, h).value;
  CHECK(std::abs(lhs - rhs) < 2e-9);
  CHECK(std::abs(integrate(m, g).value) <= total_mass(variation(m)) + 1e-12);
}

TEST_CASE("2D surface measure") {
  RadonMeasure2D m;
  m.domain = {Vec2(-2, -2), Vec2(2, 2)};
  m.surfaces.push_back({CircleArc{Vec2::Zero(), 1.0, 0.0, 2 * std::numbers::pi}, [](const Vec2&) { return 1.0; }});
  CHECK(total_mass(m) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-12));
  const auto half = restrict(m, Box{Vec2(0, -2), Vec2(2, 2)});
  CHECK(total_mass(half) == doctest::Approx(std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("test function profiles") {
  for (auto kind : {ProfileKind::Bump, ProfileKind::Plateau, ProfileKind::Poly}) {
    Profile p{kind, 0.4};
    CHECK(p.value(0.0) == doctest::Approx(1.0));
    CHECK(p.value(1.0) == 0.0);
    for (double s : {-0.9, -0.45, 0.2, 0.7}) {
      const double h = 1e-6;
      CHECK(p.derivative(s) == doctest::Approx((p.value(s + h) - p.value(s - h)) / (2 * h)).epsilon(1e-6));
    }
  }
}

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pairlab/variational.hpp"

using namespace pairlab;
using nlohmann::json;

namespace {

const Interval kLine{-1.0, 2.0};

Field1D unit_field(const Interval& d) { return make_field_1d(json{{"kind", "constant"}, {"params", {{"c", 1.0}}}}, d); }

Field1D t_field(const Interval& d) {
  return make_field_1d(
      json{{"kind", "separable"}, {"params", {{"g", {{"kind", "linear"}, {"c0", 0.0}, {"c1", 1.0}}}, {"a", "const"}}}}, d);
}

BvFunction1D indicator(double a, double b) {
  return BvFunction1D::with_jump_sizes(kLine, ac_constant(0.0), {{a, 1.0}, {b, -1.0}});
}

BvFunction1D mixed() {
  return BvFunction1D::with_jump_sizes({-0.5, 1.5}, ac_sin(0.3, 1.0, 0.2), {{-0.2, 0.6}, {1.2, -0.9}},
                                       CantorPart{CantorLadder{1.0 / 3.0, 12}, 0.0, 1.0, 0.8});
}

}  // namespace

TEST_CASE("F^phi on a ramp and on a jump") {
  const auto b = make_field_1d(
      json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "affine"}, {"c0", 0.0}, {"c1", 1.0}}}}}}, kLine);
  const BvFunction1D ramp(kLine, ac_piecewise_linear({-1.0, 0.0, 1.0, 2.0}, {0.0, 0.0, 1.0, 1.0}));
  const TestFunction1D phi{{ProfileKind::Plateau, 0.9}, 0.5, 1.4, 1.0};
  const auto f = f_phi_smooth(b, ramp, phi, kLine);
  CHECK_FALSE(f.infinite);
  CHECK(f.value == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(f_phi_smooth(b, indicator(0.0, 1.0), phi, kLine).infinite);
}

TEST_CASE("mollified indicator keeps its variation") {
  const auto u = indicator(0.0, 1.0);
  const auto seq = mollified_sequence(u, kLine, geometric_schedule(0.2, 12));
  REQUIRE(seq.elements.size() == 12);
  const auto& last = seq.elements.back().u;
  CHECK(last.value(0.5) == doctest::Approx(1.0));
  CHECK(last.value(0.0) == doctest::Approx(0.5).epsilon(1e-9));
  const auto st = sequence_stats(seq, u);
  CHECK(st.sup_linf == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(st.sup_tv == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(st.final_l1 < 1e-4);

  const auto r = lsc_check(unit_field(kLine), Functional::F, seq, u, kLine);
  CHECK(r.target == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(r.margin) < 1e-5);
  const auto rp = lsc_check(t_field(kLine), Functional::F, seq, u, kLine);
  CHECK(rp.target == doctest::Approx(1.0).epsilon(1e-10));  // two jumps of mean level 1/2
  CHECK(std::abs(rp.margin) < 1e-5);
}

TEST_CASE("continuity of G_phi along mollified jumps") {
  const auto u = BvFunction1D::with_jump_sizes(kLine, ac_constant(0.0), {{0.0, 1.0}});
  const TestFunction1D phi{{}, 0.1, 0.6, 1.0};
  const auto seq = mollified_sequence(u, kLine, geometric_schedule(0.1, 12));
  const auto tab = continuity_check_Gphi(unit_field(kLine), phi, seq, u);
  CHECK(tab.target == doctest::Approx(phi(0.0)).epsilon(1e-10));
  CHECK(tab.final_gap() < 1e-6);

  const Interval d{0.0, 3.0};
  const auto b = make_field_1d(json{{"kind", "product"}, {"t_bound", 4.0}}, d);
  const auto v = BvFunction1D::with_jump_sizes(d, ac_constant(0.0), {{1.0, 2.0}});
  const TestFunction1D psi{{}, 1.2, 0.9, 1.0};
  const auto t2 = continuity_check_Gphi(b, psi, mollified_sequence(v, d, geometric_schedule(0.1, 16)), v);
  CHECK(t2.target == doctest::Approx(2.0 * psi(1.0)).epsilon(1e-10));
  CHECK(t2.final_gap() < 1e-5);
}

TEST_CASE("L1_loc continuity requires a bounded sigma") {
  const auto u = BvFunction1D::with_jump_sizes(kLine, ac_constant(0.0), {{0.0, 1.0}});
  const TestFunction1D phi{{}, 0.1, 0.6, 1.0};
  const auto seq = spike_sequence(mollified_sequence(u, kLine, geometric_schedule(0.1, 12)), 0.3, 1.0, 0.2);
  CHECK_THROWS_AS(continuity_check_Gphi(t_field(kLine), phi, seq, u), LabError);
}

TEST_CASE("oscillation makes lower semicontinuity strict") {
  const auto u = indicator(0.0, 1.0);
  const auto base = mollified_sequence(u, kLine, geometric_schedule(0.2, 12));
  const auto seq = oscillating_sequence(base, 0.5, 8.0);
  const auto r = lsc_check(unit_field(kLine), Functional::F, seq, u, kLine);
  CHECK(r.margin > 1.0);
  const auto g = lsc_check(t_field(kLine), Functional::Gplus, seq, u, kLine);
  CHECK(g.margin > 0.1);
}

TEST_CASE("relaxation on a jump and on the ladder") {
  const TestFunction1D phi{{}, 0.2, 1.0, 1.0};
  const auto u = BvFunction1D::with_jump_sizes(kLine, ac_constant(0.0), {{0.1, 2.0}});
  const auto r = relaxation_check(t_field(kLine), u, phi, kLine, geometric_schedule(0.1, 12));
  CHECK(r.target == doctest::Approx(2.0 * phi(0.1)).epsilon(1e-10));
  CHECK(r.gap < 1e-4);
  REQUIRE(r.parts.size() == 1);
  CHECK(r.parts[0].value == doctest::Approx(r.parts[0].target).epsilon(1e-4));

  const Interval d{-0.5, 1.5};
  const BvFunction1D c(d, ac_constant(0.0), {}, CantorPart{CantorLadder{1.0 / 3.0, 12}, 0.0, 1.0, 1.0});
  const TestFunction1D flat{{ProfileKind::Plateau, 0.6}, 0.5, 0.9, 1.0};
  const auto rc = relaxation_check(unit_field(d), c, flat, d, geometric_schedule(0.05, 12));
  CHECK(rc.target == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rc.gap < 1e-4);
}

TEST_CASE("blow-up quotients approach the densities") {
  const auto b = make_field_1d(json{{"kind", "sin_shift"}, {"params", {{"amplitude", 0.8}}}}, {-0.5, 1.5});
  const auto u = mixed();
  const auto j = blowup_density(b, u, -0.2, 0.1);
  CHECK(std::abs(j.limit - j.theta) < 1e-3);
  const auto a = blowup_density(b, u, 1.35, 0.1);
  CHECK(std::abs(a.limit - a.theta) < 1e-3);
}

TEST_CASE("truncated fields") {
  const auto b = make_field_1d(json{{"kind", "sin_shift"}, {"params", {{"amplitude", 0.8}}}}, {-0.5, 1.5});
  const auto v = BvFunction1D::with_jump_sizes({-0.5, 1.5}, ac_sin(1.5, 2.0, 0.3), {{0.4, 1.2}, {1.1, -2.0}});
  const TestFunction1D phi{{}, 0.5, 0.9, 1.0};
  for (int k : {2, 3}) {
    CHECK(truncation_consistency(b, k, v, phi).residual < 1e-8);
    const auto s = sigma_k_identities(b, k, v);
    CHECK(s.samples > 10);
    CHECK(s.max_diffuse < 1e-6);
    CHECK(s.max_jump < 1e-6);
  }
}

TEST_CASE("smoothed discs in two dimensions") {
  const Box sq{Vec2(-2, -2), Vec2(2, 2)};
  const auto b = make_field_2d(json{{"kind", "separable"}, {"params", {{"g", "one"}, {"a", {{"kind", "identity"}}}}}}, sq);
  const auto u = BvFunction2D::piecewise_constant(sq, 0.0, {{Disc{Vec2::Zero(), 1.0}, 1.0}});
  const auto seq = smoothed_disc_sequence(u, geometric_schedule(0.2, 12));
  const auto r = lsc_check(b, Functional::F, seq, u, sq);
  CHECK(r.target == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-9));
  CHECK(std::abs(r.margin) < 1e-5);
  const TestFunction2D phi{{ProfileKind::Plateau, 0.7}, Vec2::Zero(), Vec2(1.8, 1.8), 1.0};
  const auto rx = relaxation_check(b, u, phi, sq, geometric_schedule(0.2, 12));
  CHECK(rx.target == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-9));
  CHECK(rx.gap < 1e-4);
}

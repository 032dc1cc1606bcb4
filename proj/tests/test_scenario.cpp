#include "doctest.h"
#include "pairlab/scenario.hpp"

using namespace pairlab;
using nlohmann::json;

namespace {

json jump_scenario() {
  return json::parse(R"({
    "scenario_id": "unit_jump",
    "field": {"kind": "constant", "params": {"c": 1.0}},
    "bv": {"kind": "bv1d", "domain": [-1, 1], "jump_sizes": [[0.0, 1.0]]},
    "phi": {"profile": "bump", "center": 0.0, "half_width": 0.5},
    "window": [-0.5, 0.5],
    "eps_schedule": {"eps0": 0.1, "n": 12},
    "checks": ["two_route", {"name": "chain_rule", "tolerance": 1e-7}, "order"]
  })");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const LabError& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario s = parse_scenario(jump_scenario());
  CHECK(s.id == "unit_jump");
  CHECK(s.dim == 1);
  REQUIRE(s.checks.size() == 3);
  CHECK(s.checks[1].tolerance == 1e-7);
  CHECK(s.eps.size() == 12);
  CHECK(s.eps[1] == doctest::Approx(0.05));

  json bad = jump_scenario();
  bad.erase("phi");
  CHECK(kind_of([&] { parse_scenario(bad); }) == ErrorKind::SpecError);
  bad = jump_scenario();
  bad["checks"] = {"no_such_check"};
  CHECK(kind_of([&] { parse_scenario(bad); }) == ErrorKind::UnknownCheck);
  bad = jump_scenario();
  bad["window"] = "wide";
  CHECK(kind_of([&] { parse_scenario(bad); parse_interval(bad["window"]); }) == ErrorKind::SpecError);
  CHECK(kind_of([] { parse_schedule(json{{"n", 3}}); }) == ErrorKind::SpecError);
  CHECK(kind_of([] { default_tolerance("nope"); }) == ErrorKind::UnknownCheck);
}

TEST_CASE("running checks") {
  const Scenario s = parse_scenario(jump_scenario());
  const auto reports = run_scenario(s);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    CHECK(r.pass);
    CHECK(r.scenario == "unit_jump");
  }
  CHECK(reports[1].tolerance == 1e-7);
  CHECK(run_check(s, s.checks[0], 10.0).tolerance == doctest::Approx(1e-5));
  const json j = to_json(reports[0]);
  CHECK(j.at("check") == "two_route");
  CHECK_FALSE(j.contains("seconds"));
}

TEST_CASE("assumption violations become failing reports") {
  json j = jump_scenario();
  j["field"] = {{"kind", "sin_shift"}, {"params", {{"amplitude", 0.8}}}, {"L", 0.1}};
  const Scenario s = parse_scenario(j);
  const auto r = run_check(s, s.checks[0]);
  CHECK_FALSE(r.pass);
  CHECK(r.diagnostics.at("error") == "AssumptionViolation");
}

TEST_CASE("series tables") {
  const Scenario s = parse_scenario(jump_scenario());
  const Series a = emit_series(s, "approximation");
  CHECK(a.parameter == "eps");
  CHECK(a.rows.size() == 12);
  CHECK(emit_series(s, "order").rows.empty());
  CHECK(kind_of([&] { emit_series(s, "bogus"); }) == ErrorKind::UnknownCheck);
}

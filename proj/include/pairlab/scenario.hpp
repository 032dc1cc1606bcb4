#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "pairlab/variational.hpp"

namespace pairlab {

/// One line of a verification report.
struct CheckReport {
  std::string scenario;
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double seconds = 0.0;  // wall time, not serialized by to_json
  nlohmann::json diagnostics = nlohmann::json::object();
};

nlohmann::json to_json(const CheckReport& r);

struct CheckSpec {
  std::string name;
  double tolerance = 0.0;  // 0: the check's default
  nlohmann::json params = nlohmann::json::object();
};

struct Setup1D {
  Field1D field;
  BvFunction1D u;
  TestFunction1D phi;
  Interval window;
};

struct Setup2D {
  Field2D field;
  BvFunction2D u;
  TestFunction2D phi;
  Box window;
};

/// Parsed scenario. The field is built lazily by `setup()` so that an
/// assumption violation in the field spec surfaces as a failed check rather
/// than a parse error.
struct Scenario {
  std::string id;
  std::string description;
  nlohmann::json raw;
  int dim = 1;
  std::vector<CheckSpec> checks;
  std::vector<double> eps;
  std::string mode;
};

/// Throws LabError(SpecError) on a malformed scenario.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

std::variant<Setup1D, Setup2D> setup(const Scenario& s);

/// Parsers for the scenario building blocks (SpecError on bad input).
Interval parse_interval(const nlohmann::json& j);
Box parse_box(const nlohmann::json& j);
BvFunction1D parse_bv1d(const nlohmann::json& j);
BvFunction2D parse_bv2d(const nlohmann::json& j);
TestFunction1D parse_phi1d(const nlohmann::json& j);
TestFunction2D parse_phi2d(const nlohmann::json& j);
/// {"eps0", "n", "ratio"} or an explicit list.
std::vector<double> parse_schedule(const nlohmann::json& j);

const std::vector<std::string>& known_checks();
double default_tolerance(const std::string& check);

/// Run one check; library errors become failing reports with the error kind
/// in the diagnostics. `tol_scale` multiplies the tolerance.
CheckReport run_check(const Scenario& s, const CheckSpec& c, double tol_scale = 1.0);
std::vector<CheckReport> run_scenario(const Scenario& s, double tol_scale = 1.0);

/// (parameter, value) rows behind a check; empty for checks without a table.
/// UnknownCheck for names outside known_checks().
struct Series {
  std::string parameter;
  std::string value;
  std::vector<std::pair<double, double>> rows;
};
Series emit_series(const Scenario& s, const std::string& check);

}  // namespace pairlab

#pragma once

#include <string>
#include <vector>

#include "pairlab/bv.hpp"
#include "pairlab/fields.hpp"
#include "pairlab/measures.hpp"

namespace pairlab {

struct PairingOptions {
  double tol = 1e-10;  // absolute quadrature tolerance of a single pairing value
  /// Evaluate q(b_t, nu) by the cylinder limits everywhere instead of b . nu
  /// at points where b_t is continuous.
  bool full_cylinders = false;
};

// ---------------------------------------------------------------------------
// Cylindrical averages and traces
// ---------------------------------------------------------------------------

struct CylOptions {
  int max_depth = 24;
  double threshold = 1e-7;
  double r0 = 0.0;  // 0: min(0.25 * distance to the domain boundary, 0.1)
};

struct CylAverage {
  double value = 0.0;
  bool converged = false;
  /// rows[j][i]: average over C_{r_i, rho_j} (a single row in 1D)
  std::vector<std::vector<double>> rows;
  std::vector<double> inner_limits;  // extrapolated r -> 0 limit per rho_j
};

/// q(b_t, nu)(x): r -> 0 first, then rho -> 0, both along r0 2^-i with
/// Aitken extrapolation. Non-convergence is reported, not thrown.
CylAverage cylindrical_average(const Field1D& b, double t, double nu, double x, const CylOptions& opt = {});
CylAverage cylindrical_average(const Field2D& b, double t, const Vec2& nu, const Vec2& x,
                               const CylOptions& opt = {});

struct NormalTrace1D {
  std::vector<BoundaryPoint1D> points;
  std::vector<double> density;
  std::vector<bool> converged;
};

struct TraceSample {
  double s = 0.0;  // arclength from the start of the piece
  Vec2 point;
  double value = 0.0;
  bool converged = false;
};

struct NormalTrace2D {
  std::vector<std::vector<TraceSample>> pieces;  // aligned with the set's pieces
};

/// Trace of the normal component of b_t on the boundary of a set, with the
/// interior normal of the set.
NormalTrace1D normal_trace(const Field1D& b, double t, const FinitePerimeterSet1D& e, const CylOptions& opt = {});
NormalTrace2D normal_trace(const Field2D& b, double t, const FinitePerimeterSet2D& e, int samples_per_piece = 32,
                           const CylOptions& opt = {});

// ---------------------------------------------------------------------------
// The pairing measure
// ---------------------------------------------------------------------------

struct DistributionalPairing {
  double value = 0.0;        // with the primitive B
  double double_form = 0.0;  // with the inner t-integrals of b and Div b
  double error = 0.0;
};

/// -int phi (Div_x B)(x,u) - int B(x,u) . grad phi, and the same with the
/// inner t-integrals done by quadrature. FormMismatch when the two differ by
/// more than ten times the tolerance.
DistributionalPairing pairing_distributional(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                             const PairingOptions& opt = {});
DistributionalPairing pairing_distributional(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                             const PairingOptions& opt = {});

enum class Route { Distributional, Representation, Traces, Coarea };
std::string_view to_string(Route r);

/// Pairing measure with its density against |Du| split by part.
struct PairingMeasure1D {
  RadonMeasure1D measure;
  Route provenance = Route::Representation;
  Scalar1D theta_ac;                // at points where u' != 0
  Scalar1D theta_cantor;            // on the Cantor carrier
  std::vector<double> theta_jump;   // aligned with u.jumps()
};

struct PairingMeasure2D {
  RadonMeasure2D measure;
  Route provenance = Route::Representation;
  Scalar2D theta_ac;
  std::vector<Scalar2D> theta_surface;  // aligned with u.regions()
};

PairingMeasure1D pairing_by_representation(const Field1D& b, const BvFunction1D& u, const PairingOptions& opt = {});
PairingMeasure2D pairing_by_representation(const Field2D& b, const BvFunction2D& u, const PairingOptions& opt = {});

/// Same measure built from normal traces on the boundaries of {u > t}.
PairingMeasure1D pairing_by_traces(const Field1D& b, const BvFunction1D& u, const PairingOptions& opt = {});
PairingMeasure2D pairing_by_traces(const Field2D& b, const BvFunction2D& u, const PairingOptions& opt = {});

/// <mu, phi> restricted to the support of phi.
QuadResult pair(const PairingMeasure1D& mu, const TestFunction1D& phi, double tol = 1e-10);
QuadResult pair(const PairingMeasure2D& mu, const TestFunction2D& phi, double tol = 1e-10);
/// <|mu|, phi>
QuadResult pair_variation(const PairingMeasure1D& mu, const TestFunction1D& phi, double tol = 1e-10);
QuadResult pair_variation(const PairingMeasure2D& mu, const TestFunction2D& phi, double tol = 1e-10);

/// Cross-check of representation and traces; CrossValidationMismatch beyond
/// tol (1 + |value|).
void cross_validate(const PairingMeasure1D& repr, const PairingMeasure1D& traces, const TestFunction1D& phi,
                    double tol);
void cross_validate(const PairingMeasure2D& repr, const PairingMeasure2D& traces, const TestFunction2D& phi,
                    double tol);

// ---------------------------------------------------------------------------
// Identities
// ---------------------------------------------------------------------------

/// <(b(.,u),Du),phi> against int_R <(b_t, D chi_{u>t}),phi> dt.
Comparison coarea_pairing_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                const PairingOptions& opt = {});
Comparison coarea_pairing_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                const PairingOptions& opt = {});

/// <|(b(.,u),Du)|,phi> against int_R <|(b_t, D chi_{u>t})|,phi> dt, phi >= 0.
Comparison coarea_variation_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                  const PairingOptions& opt = {});
Comparison coarea_variation_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                  const PairingOptions& opt = {});

struct ChainRule {
  double div_v = 0.0;       // <Div B(x,u(x)), phi> = -int B(x,u) . grad phi
  double div_x_term = 0.0;  // int phi (Div_x B)(x,u)
  double pairing = 0.0;     // double-integral form of the pairing
  double residual = 0.0;
};

ChainRule chain_rule_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                           const PairingOptions& opt = {});
ChainRule chain_rule_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                           const PairingOptions& opt = {});

struct LipschitzComparison {
  double lhs = 0.0;
  double bound = 0.0;
};

/// |<(b(.,u),Du),phi> - <(b_tau,Du),phi>| against
/// L |phi|_inf [int_{spt phi} |u~ - tau| d|D^d u| + int_{J_u} int_{u-}^{u+} |t - tau| dt].
/// BoundViolated when lhs > bound + slack.
LipschitzComparison lipschitz_comparison_check(const Field1D& b, const BvFunction1D& u, double tau,
                                               const TestFunction1D& phi, double slack = 1e-8,
                                               const PairingOptions& opt = {});
LipschitzComparison lipschitz_comparison_check(const Field2D& b, const BvFunction2D& u, double tau,
                                               const TestFunction2D& phi, double slack = 1e-8,
                                               const PairingOptions& opt = {});

struct MassBound {
  double lhs = 0.0;    // |mu|(E)
  double bound = 0.0;  // |b|_{L^inf(K)} |Du|(E)
  double b_sup = 0.0;
  double du_mass = 0.0;
};

MassBound mass_bound_check(const Field1D& b, const BvFunction1D& u, const PairingMeasure1D& mu, const Interval& e);
MassBound mass_bound_check(const Field2D& b, const BvFunction2D& u, const PairingMeasure2D& mu, const Box& e);

struct GapRow {
  double parameter = 0.0;
  double value = 0.0;
  double gap = 0.0;
};

struct ConvergenceTable {
  double target = 0.0;
  std::vector<GapRow> rows;
  double final_gap() const { return rows.empty() ? 0.0 : rows.back().gap; }
};

/// Gaps |<(b^eps(.,u),Du),phi> - <(b(.,u),Du),phi>| along the eps sequence,
/// b^eps mollified on the support of phi. 1D uses the distributional route,
/// 2D the representation route.
ConvergenceTable approximation_convergence_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                                 const std::vector<double>& eps, const PairingOptions& opt = {});
ConvergenceTable approximation_convergence_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi,
                                                 const std::vector<double>& eps, const PairingOptions& opt = {});

}  // namespace pairlab

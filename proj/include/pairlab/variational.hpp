#pragma once

#include <string>
#include <vector>

#include "pairlab/pairing.hpp"

namespace pairlab {

/// Value of F^phi: finite, or +infinity for u outside W^{1,1}.
struct ExtendedValue {
  double value = 0.0;
  bool infinite = false;

  static ExtendedValue inf() { return {0.0, true}; }
};

/// int_A phi b(x,u) . grad u for u with an absolutely continuous derivative
/// only; infinite marker otherwise.
ExtendedValue f_phi_smooth(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi, const Interval& a,
                           double tol = 1e-10);
ExtendedValue f_phi_smooth(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi, const Box& a,
                           double tol = 1e-8);

// ---------------------------------------------------------------------------
// W^{1,1} sequences
// ---------------------------------------------------------------------------

/// A W^{1,1} function given by its value and derivative; breaks mark points
/// where the derivative may fail to be smooth.
struct Sobolev1D {
  Scalar1D value;
  Scalar1D derivative;
  std::vector<double> breaks;
};

struct Sobolev2D {
  Scalar2D value;
  Vector2D gradient;
  /// Thin bands where the gradient concentrates: annuli {r0 < |x - c| < r1}.
  struct Band {
    Vec2 center;
    double r0 = 0.0, r1 = 0.0;
  };
  std::vector<Band> bands;
  bool smooth_elsewhere = true;  // gradient vanishes outside the bands unless false
};

enum class SeqMode { L1, WeakStar, LinfL1 };
std::string_view to_string(SeqMode m);
SeqMode seq_mode_from_string(std::string_view s);

template <class S>
struct SequenceElement {
  double parameter = 0.0;  // eps or 1/n
  S u;
};

template <class S, class W>
struct ApproximatingSequence {
  std::string generator;
  SeqMode mode = SeqMode::WeakStar;
  W window;
  std::vector<SequenceElement<S>> elements;
};

using Sequence1D = ApproximatingSequence<Sobolev1D, Interval>;
using Sequence2D = ApproximatingSequence<Sobolev2D, Box>;

/// eps_0 2^-i, i < n
std::vector<double> geometric_schedule(double eps0, int n, double ratio = 0.5);

/// u_eps = rho_eps * u on the window, u extended outside its domain by the
/// one-sided limits at the ends. Each element is the cubic Hermite
/// interpolant of the exact convolution on a grid refined to eps/8 where Du
/// has mass within eps.
Sequence1D mollified_sequence(const BvFunction1D& u, const Interval& window, const std::vector<double>& eps);

/// (amplitude / n) sin(frequency n x) added to the n-th element of `base`
/// (n from 1): bounded, L^1-convergent, with |Du_n| not converging to |Du|.
Sequence1D oscillating_sequence(const Sequence1D& base, double amplitude, double frequency);

/// height n bump(n^3 (x - x0) / width) added to the n-th element of `base`:
/// L^1-convergent, unbounded in L^infinity and in variation.
Sequence1D spike_sequence(const Sequence1D& base, double x0, double height, double width);

/// Constant sequence u_n = u for u with an AC part only.
Sequence1D constant_sequence(const BvFunction1D& u, const Interval& window, int n);

struct SequenceStats {
  double sup_linf = 0.0;  // sup_n |u_n|_inf on the window
  double sup_tv = 0.0;    // sup_n |Du_n|(window)
  double final_l1 = 0.0;  // |u_N - u|_{L^1(window)}
};
SequenceStats sequence_stats(const Sequence1D& seq, const BvFunction1D& u);

/// Radial smoothing of a piecewise constant u built from discs:
/// u_eps = c0 + sum (v_i - c0) S((r_i - |x - c_i|) / eps), S the integrated
/// bump. Discs must be disjoint with gaps larger than 2 eps.
Sequence2D smoothed_disc_sequence(const BvFunction2D& u, const std::vector<double>& eps);
Sequence2D constant_sequence(const BvFunction2D& u, const Box& window, int n);

// ---------------------------------------------------------------------------
// Functionals on W^{1,1} elements and on BV targets
// ---------------------------------------------------------------------------

enum class Functional { F, Gplus, G };
std::string_view to_string(Functional f);

/// int_A phi b(x,v) . grad v (phi omitted when null).
double functional_value(const Field1D& b, const Sobolev1D& v, Functional f, const Interval& a,
                        const TestFunction1D* phi = nullptr, double tol = 1e-9);
double functional_value(const Field2D& b, const Sobolev2D& v, Functional f, const Box& a,
                        const TestFunction2D* phi = nullptr, double tol = 1e-8);

/// F, G+ or G of the pairing measure of u on the window A.
double functional_target(const PairingMeasure1D& mu, Functional f, const Interval& a);
double functional_target(const PairingMeasure2D& mu, Functional f, const Box& a);

struct SequenceRow {
  double parameter = 0.0;
  double value = 0.0;
  double gap = 0.0;
};

struct ContinuityTable {
  SeqMode mode = SeqMode::WeakStar;
  double target = 0.0;
  std::vector<SequenceRow> rows;
  double sup_linf = 0.0, sup_tv = 0.0;
  double final_gap() const { return rows.empty() ? 0.0 : rows.back().gap; }
};

/// G_phi(u_n) against G_phi(u). The mode premise is checked numerically:
/// bounded sequences for L1, sigma in L^N-compatible fields with bounded
/// variation for weak*, bounded sigma for LinfL1. AssumptionViolation when
/// the premise fails.
ContinuityTable continuity_check_Gphi(const Field1D& b, const TestFunction1D& phi, const Sequence1D& seq,
                                      const BvFunction1D& u, const PairingOptions& opt = {});

struct LscResult {
  Functional functional = Functional::F;
  double target = 0.0;
  double liminf = 0.0;  // extrapolated limit of a geometric tail, else min over the last five
  bool extrapolated = false;
  double margin = 0.0;  // liminf - target
  std::vector<SequenceRow> rows;
  int truncation_k = 0;  // k > |u|_inf + 1 used by the truncation device
};

/// Lower semicontinuity of F or G+ along the sequence on the window A.
/// InequalityViolated when margin < -tolerance.
LscResult lsc_check(const Field1D& b, Functional f, const Sequence1D& seq, const BvFunction1D& u, const Interval& a,
                    double tolerance = 1e-6);
LscResult lsc_check(const Field2D& b, Functional f, const Sequence2D& seq, const BvFunction2D& u, const Box& a,
                    double tolerance = 1e-6);

/// G^k_phi(v) and G^k_phi(T_k v) with b^k = sigma_k b and T_k the clamp to
/// [-k, k].
Comparison truncation_consistency(const Field1D& b, int k, const BvFunction1D& v, const TestFunction1D& phi,
                                  const PairingOptions& opt = {});

struct SigmaKIdentity {
  double max_diffuse = 0.0;  // max |Theta(b^k,v) - sigma_k(v~) Theta(b,v)| on AC and Cantor samples
  double max_jump = 0.0;     // max |Theta(b^k,v) - mean sigma_k(t) q(b_t,nu) dt| over jumps
  int samples = 0;
};

/// Density identities for the truncated field, with q from the cylinder
/// limits.
SigmaKIdentity sigma_k_identities(const Field1D& b, int k, const BvFunction1D& v, int samples = 40);

struct WindowPart {
  std::string label;
  Interval window;
  double value = 0.0;   // F^phi(u_eps, window) at the finest eps
  double target = 0.0;  // int_window phi dmu
};

struct RelaxationResult {
  double target = 0.0;
  std::vector<SequenceRow> rows;  // F^phi(u_eps, A)
  double liminf = 0.0;
  bool extrapolated = false;
  double gap = 0.0;
  std::vector<WindowPart> parts;
};

/// Mollified recovery sequence for the relaxed functional of F^phi.
/// GapAboveTolerance when |liminf - target| > tolerance.
RelaxationResult relaxation_check(const Field1D& b, const BvFunction1D& u, const TestFunction1D& phi,
                                  const Interval& a, const std::vector<double>& eps, double tolerance = 1e-4);
RelaxationResult relaxation_check(const Field2D& b, const BvFunction2D& u, const TestFunction2D& phi, const Box& a,
                                  const std::vector<double>& eps, double tolerance = 1e-4);

struct BlowupTable {
  std::vector<SequenceRow> rows;  // (r, mu(B_r) / |Du|(B_r), |quotient - theta|)
  double limit = 0.0;             // Aitken-extrapolated
  double theta = 0.0;             // density from the representation
  bool converged = false;
};

/// mu(B_r(x0)) / |Du|(B_r(x0)) for r = r0 2^-i. In 2D B_r is the square of
/// half-side r.
BlowupTable blowup_density(const Field1D& b, const BvFunction1D& u, double x0, double r0, int n = 12);
BlowupTable blowup_density(const Field2D& b, const BvFunction2D& u, const Vec2& x0, double r0, int n = 10);

}  // namespace pairlab

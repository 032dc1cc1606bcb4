#pragma once

#include <cmath>
#include <vector>

#include "pairlab/errors.hpp"
#include "pairlab/quadrature.hpp"

namespace pairlab {

/// Cantor-Vitali ladder on [0,1]: at every construction step the middle
/// `removed_fraction` of each surviving interval is removed and the two
/// remaining pieces each carry half of the mass. The Stieltjes measure dF is
/// realized at a finite construction depth.
struct CantorLadder {
  double removed_fraction = 1.0 / 3.0;
  int depth = 12;

  /// Relative length of each of the two pieces kept at a construction step.
  double piece_ratio() const { return 0.5 * (1.0 - removed_fraction); }

  void validate() const {
    if (!(removed_fraction > 0.0 && removed_fraction < 1.0))
      throw LabError(ErrorKind::InvalidArgument, "ladder removed fraction must lie in (0,1)");
    if (depth < 1 || depth > 26) throw LabError(ErrorKind::InvalidArgument, "ladder depth must lie in [1,26]");
  }

  /// Exact ladder value (to double precision) at s.
  double value(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double r = piece_ratio();
    double lo = 0.0, len = 1.0, acc = 0.0, w = 0.5;
    for (int k = 0; k < 1100 && w > 0.0; ++k) {
      const double rel = (s - lo) / len;
      if (rel < r) {
        len *= r;
      } else if (rel > 1.0 - r) {
        acc += w;
        lo += (1.0 - r) * len;
        len *= r;
      } else {
        return acc + w;
      }
      w *= 0.5;
    }
    return acc;
  }

  /// Midpoints of the 2^depth construction intervals, increasing. Each node
  /// carries mass 2^-depth.
  std::vector<double> nodes() const {
    std::vector<double> out;
    out.reserve(std::size_t{1} << depth);
    collect(0.0, 1.0, 0, out);
    return out;
  }

  /// Remaining construction intervals at `level` as (left, length) pairs.
  std::vector<std::pair<double, double>> intervals(int level) const {
    std::vector<std::pair<double, double>> out;
    collect_intervals(0.0, 1.0, 0, level, out);
    return out;
  }

  /// Removed gaps down to `level` (exclusive) as (left, right) pairs,
  /// increasing.
  std::vector<std::pair<double, double>> gaps(int level) const {
    std::vector<std::pair<double, double>> out;
    collect_gaps(0.0, 1.0, 0, level, out);
    return out;
  }

  struct StieltjesResult {
    double value = 0.0;
    double error = 0.0;
  };

  /// Stieltjes integral of h against dF over the part of [0,1] inside
  /// [lo,hi]: midpoint rule on the construction intervals at `depth`.
  /// Intervals that straddle the window are refined up to 24 extra levels.
  /// The error estimate is the difference with the same rule one level up.
  template <class H>
  StieltjesResult stieltjes(H&& h, double lo = 0.0, double hi = 1.0) const {
    CompensatedSum fine, coarse;
    walk(h, 0.0, 1.0, 1.0, 0, depth, lo, hi, fine);
    walk(h, 0.0, 1.0, 1.0, 0, depth - 1, lo, hi, coarse);
    return {fine.value(), std::abs(fine.value() - coarse.value())};
  }

 private:
  void collect(double left, double len, int level, std::vector<double>& out) const {
    if (level == depth) {
      out.push_back(left + 0.5 * len);
      return;
    }
    const double r = piece_ratio();
    collect(left, len * r, level + 1, out);
    collect(left + (1.0 - r) * len, len * r, level + 1, out);
  }

  void collect_intervals(double left, double len, int level, int target,
                         std::vector<std::pair<double, double>>& out) const {
    if (level == target) {
      out.emplace_back(left, len);
      return;
    }
    const double r = piece_ratio();
    collect_intervals(left, len * r, level + 1, target, out);
    collect_intervals(left + (1.0 - r) * len, len * r, level + 1, target, out);
  }

  void collect_gaps(double left, double len, int level, int target, std::vector<std::pair<double, double>>& out) const {
    if (level >= target) return;
    const double r = piece_ratio();
    collect_gaps(left, len * r, level + 1, target, out);
    out.emplace_back(left + r * len, left + (1.0 - r) * len);
    collect_gaps(left + (1.0 - r) * len, len * r, level + 1, target, out);
  }

  template <class H>
  void walk(H& h, double left, double len, double mass, int level, int target, double lo, double hi,
            CompensatedSum& sum) const {
    const double right = left + len;
    if (right <= lo || left >= hi) return;
    const bool inside = left >= lo && right <= hi;
    if (inside && level >= target) {
      sum.add(mass * h(left + 0.5 * len));
      return;
    }
    if (!inside && level >= target + 24) {
      // Straddling piece below resolution: mass inside the window at the
      // clamped midpoint.
      const double a = std::max(lo, left), b = std::min(hi, right);
      sum.add(mass * (value_in(b, left, len) - value_in(a, left, len)) * h(0.5 * (a + b)));
      return;
    }
    const double r = piece_ratio();
    walk(h, left, len * r, 0.5 * mass, level + 1, target, lo, hi, sum);
    walk(h, left + (1.0 - r) * len, len * r, 0.5 * mass, level + 1, target, lo, hi, sum);
  }

  // Ladder value rescaled to the construction interval [left, left+len].
  double value_in(double s, double left, double len) const { return value((s - left) / len); }
};

}  // namespace pairlab

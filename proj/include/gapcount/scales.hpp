#pragma once

// Critical scales read off a gap profile: the upper-tail accumulation scale
// Lambda_n (growth exponent of the envelope N_n(t) <= e^{Lambda t}), the
// contact point where the counting curve touches that envelope, resolved
// accumulation scales, the Laplace envelope of log Z, and the rank boundary.

#include <cstdint>

#include "gapcount/row.hpp"

namespace gapcount {

/// A per-row scale that may be infinite (ties at the maximum) or undefined
/// (no competitors at all, i.e. an n = 1 row).
struct ScaleValue {
  double value = 0.0;  // +inf when infinite is set
  bool infinite = false;
  bool degenerate = false;
};

/// Lambda_n = max over stored gaps u of log N_n(u) / u (exact finite
/// maximization over the gap set; no grid search). Ties at the maximum
/// (n_max >= 2) force the infinite flag; an empty gap set is degenerate.
ScaleValue accumulation_scale(const GapProfile& profile);

struct ContactPoint {
  double delta = 0.0;  // contact gap (score units)
  double alpha = 0.0;  // log N_n(delta) / log n, in (0, 1]
  bool degenerate = false;
};

/// Largest gap u with log N_n(u)/u >= (1 - eps) * Lambda_n, and its
/// accumulation exponent. eps is relative slack on Lambda (eps = 0 recovers
/// the exact maximizer). Tied profile -> std::domain_error.
ContactPoint contact_point(const GapProfile& profile, double eps = kContactEps);

// The identity lambda * delta == alpha * log n holds to ~1e-10 relative on
// non-tied rows; C stores lambda * delta (the contact-count entropy).
struct ContactTriple {
  double lambda = 0.0;  // +inf when is_tie
  double delta = 0.0;
  double alpha = 0.0;
  double C = 0.0;
  bool is_tie = false;     // n_max >= 2  <=>  lambda infinite
  bool degenerate = false; // n == 1 row: nothing to read
  std::int64_t n_max = 1;
  std::int64_t n = 0;
};

ContactTriple contact_triple(const GapProfile& profile, double eps = kContactEps);
ContactTriple contact_triple(const ScoreRow& row, double eps = kContactEps,
                             double tie_abs_tol = 0.0);

/// Resolved accumulation scale at resolution r >= 0:
/// max over gaps u with log N_n(u) > r of (log N_n(u) - r) / u, with
/// sup(empty) = 0. Equals accumulation_scale exactly at r = 0 on non-tied
/// rows. On tied rows with log n_max > r the sup diverges as t -> 0 and the
/// infinite flag is returned.
ScaleValue resolved_scale(const GapProfile& profile, double r);

/// Laplace envelope S_n(beta) = max over t in {0} U gaps of (log N_n(t) - beta t).
/// Satisfies S <= log Z <= S + log(1 + log n). beta <= 0 -> std::domain_error.
double laplace_envelope(const GapProfile& profile, double beta);

/// Rank boundary sup{beta >= 0 : log Z(beta) >= r} for 0 <= r <= log n.
/// log Z is continuous and strictly decreasing (once any positive gap exists),
/// so for r > log n_max this is the unique root of log Z(beta) = r, found by
/// bisection to better than 1e-10 relative; r <= log n_max returns the
/// infinite flag (log Z never drops to r). r > log n -> std::domain_error.
ScaleValue rank_boundary(const GapProfile& profile, double r);

/// log Z evaluated from the profile's distinct gaps and multiplicities, in
/// log1p form. Agrees with softmax(row, beta).log_z up to gap deduplication.
double profile_log_z(const GapProfile& profile, double beta);

}  // namespace gapcount

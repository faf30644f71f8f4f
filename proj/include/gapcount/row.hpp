#pragma once

// One attention-score row and its per-row observables.
//
// A row is the vector of pre-softmax scores of one query against n keys.
// Everything downstream is computed from the competitor gaps z* - z_j
// (z* the row maximum): the gap profile is the discrete carrier of the
// cumulative gap-counting function N_n(t), and the softmax is always
// evaluated in max-shifted form so no finite inverse temperature can
// overflow.

#include <cstdint>
#include <string>
#include <vector>

#include "gapcount/common.hpp"

namespace gapcount {

struct RowMeta {
  std::string cell_id;
  int layer = 0;
  int head = 0;
  std::string seq_id;
  std::int64_t n = 0;  // context length == scores.size()
  std::int64_t query_pos = 0;
};

struct ScoreRow {
  std::vector<double> scores;
  RowMeta meta;
};

/// Convenience constructor that fills meta.n from the score count.
ScoreRow make_row(std::vector<double> scores, RowMeta meta = {});

/// Throws input_error (naming the row) on empty scores, meta.n mismatch,
/// or any non-finite entry.
void validate_row(const ScoreRow& row);

// ---------------------------------------------------------------------------
// Gap profile: N_n(t) as a step function.
// ---------------------------------------------------------------------------

// Invariants: gaps ascending and distinct; cum_counts strictly increasing with
// cum_counts.back() == n; n_max >= 1 and N_n(t) == n_max on [0, gaps[0]).
struct GapProfile {
  double z_star = 0.0;
  std::vector<double> gaps;              // distinct positive competitor gaps, ascending
  std::vector<std::int64_t> cum_counts;  // cum_counts[i] = N_n(gaps[i])
  std::int64_t n_max = 1;                // N_n(0): tie multiplicity at the maximum
  std::int64_t n = 0;
};

/// Builds the gap profile of a row. Scores within tie_abs_tol of the maximum
/// count into n_max (default 0: bit-exact ties only). Distinct gap values are
/// merged when they differ by <= kGapMergeRel * max(1, |z*|).
GapProfile gap_profile(const ScoreRow& row, double tie_abs_tol = 0.0);

/// N_n(t): number of indices with gap <= t. Right-continuous; N_n(0) = n_max.
/// t < 0 -> std::domain_error.
std::int64_t counting_function(const GapProfile& profile, double t);

// ---------------------------------------------------------------------------
// Softmax and collapse observables.
// ---------------------------------------------------------------------------

struct SoftmaxResult {
  std::vector<double> probs;
  double Z = 1.0;      // normalized partition function, always >= 1
  double log_z = 0.0;  // rank free energy log Z, computed in log1p form
};

/// softmax at inverse temperature beta >= 0, computed from the gaps:
/// probs[j] = exp(-beta * (z* - z_j)) / Z. Cannot overflow for finite beta.
SoftmaxResult softmax(const ScoreRow& row, double beta);

struct Observables {
  double entropy = 0.0;      // H = -sum p log p (natural log, 0 log 0 := 0)
  double top_two_gap = 0.0;  // D = largest - second-largest probability
  double spread = 0.0;       // G = max - min probability
  double p_star = 1.0;       // max probability == 1/Z
  bool degenerate = false;   // n == 1: top-two gap undefined, reported as 0
};

Observables observables(const SoftmaxResult& sm);

/// Z via the integration-by-parts identity Z = beta * int_0^inf e^{-beta t} N_n(t) dt,
/// evaluated as the exact piecewise integral of the step function N_n.
/// Independent route from softmax(); the two agree to ~1e-10 relative.
/// beta <= 0 -> std::domain_error.
double partition_by_parts(const GapProfile& profile, double beta);

}  // namespace gapcount

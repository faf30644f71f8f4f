#include "gapcount/row.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gapcount {

namespace {

std::string row_label(const RowMeta& m) {
  std::ostringstream os;
  os << "cell=" << (m.cell_id.empty() ? "?" : m.cell_id) << " layer=" << m.layer
     << " head=" << m.head << " seq=" << (m.seq_id.empty() ? "?" : m.seq_id) << " n=" << m.n
     << " qpos=" << m.query_pos;
  return os.str();
}

}  // namespace

ScoreRow make_row(std::vector<double> scores, RowMeta meta) {
  meta.n = static_cast<std::int64_t>(scores.size());
  return ScoreRow{std::move(scores), std::move(meta)};
}

void validate_row(const ScoreRow& row) {
  if (row.scores.empty())
    throw input_error("empty score row (" + row_label(row.meta) + ")");
  if (row.meta.n != static_cast<std::int64_t>(row.scores.size()))
    throw input_error("row length " + std::to_string(row.scores.size()) +
                      " does not match meta.n (" + row_label(row.meta) + ")");
  for (std::size_t j = 0; j < row.scores.size(); ++j) {
    if (!std::isfinite(row.scores[j]))
      throw input_error("non-finite score at index " + std::to_string(j) + " (" +
                        row_label(row.meta) + ")");
  }
}

GapProfile gap_profile(const ScoreRow& row, double tie_abs_tol) {
  validate_row(row);
  if (!(tie_abs_tol >= 0.0) || !std::isfinite(tie_abs_tol))
    throw std::domain_error("tie_abs_tol must be finite and >= 0");

  GapProfile p;
  p.n = static_cast<std::int64_t>(row.scores.size());
  p.z_star = *std::max_element(row.scores.begin(), row.scores.end());

  std::vector<double> pos;
  pos.reserve(row.scores.size());
  std::int64_t ties = 0;
  for (double z : row.scores) {
    const double g = p.z_star - z;
    if (g <= tie_abs_tol)
      ++ties;
    else
      pos.push_back(g);
  }
  p.n_max = ties;  // >= 1: the maximum itself has gap 0

  std::sort(pos.begin(), pos.end());
  const double merge_tol = kGapMergeRel * std::max(1.0, std::abs(p.z_star));
  std::int64_t cum = ties;
  for (double g : pos) {
    ++cum;
    // merge against the run representative (the smallest value of the run)
    if (!p.gaps.empty() && g - p.gaps.back() <= merge_tol)
      p.cum_counts.back() = cum;
    else {
      p.gaps.push_back(g);
      p.cum_counts.push_back(cum);
    }
  }
  return p;
}

std::int64_t counting_function(const GapProfile& profile, double t) {
  if (!(t >= 0.0))  // also rejects NaN
    throw std::domain_error("counting function defined for t >= 0 only");
  // largest stored gap <= t; right-continuity comes from upper_bound
  const auto it = std::upper_bound(profile.gaps.begin(), profile.gaps.end(), t);
  if (it == profile.gaps.begin()) return profile.n_max;
  const auto idx = static_cast<std::size_t>(it - profile.gaps.begin()) - 1;
  return profile.cum_counts[idx];
}

SoftmaxResult softmax(const ScoreRow& row, double beta) {
  validate_row(row);
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw std::domain_error("softmax requires finite beta >= 0");

  const double z_star = *std::max_element(row.scores.begin(), row.scores.end());
  SoftmaxResult sm;
  sm.probs.resize(row.scores.size());

  // Gaps are >= 0, so every exp argument is <= 0: no overflow at any beta.
  // Exact ties at the maximum contribute exactly 1 each; z_minus_1 keeps the
  // competitor mass separate so log Z stays accurate near Z = 1.
  double comp = 0.0;
  std::int64_t zeros = 0;
  for (std::size_t j = 0; j < row.scores.size(); ++j) {
    const double g = z_star - row.scores[j];
    if (g == 0.0) {
      sm.probs[j] = 1.0;
      ++zeros;
    } else {
      sm.probs[j] = std::exp(-beta * g);
      comp += sm.probs[j];
    }
  }
  sm.Z = static_cast<double>(zeros) + comp;
  sm.log_z = std::log1p((static_cast<double>(zeros) - 1.0) + comp);
  for (double& pj : sm.probs) pj /= sm.Z;
  return sm;
}

Observables observables(const SoftmaxResult& sm) {
  Observables ob;
  if (sm.probs.empty()) throw input_error("observables of an empty distribution");

  double top = 0.0, second = 0.0, low = 1.0, h = 0.0;
  for (double pj : sm.probs) {
    if (pj > top) {
      second = top;
      top = pj;
    } else if (pj > second) {
      second = pj;
    }
    low = std::min(low, pj);
    if (pj > 0.0) h -= pj * std::log(pj);
  }
  ob.entropy = std::max(0.0, h);
  ob.p_star = top;
  ob.spread = top - low;
  if (sm.probs.size() == 1) {
    ob.degenerate = true;  // no second entry; D reported as 0
    ob.top_two_gap = 0.0;
  } else {
    ob.top_two_gap = top - second;
  }
  return ob;
}

double partition_by_parts(const GapProfile& profile, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::domain_error("partition_by_parts requires finite beta > 0");
  if (profile.gaps.empty())  // N is constant n: beta * int e^{-beta t} n dt = n
    return static_cast<double>(profile.n);

  // beta * integral of e^{-beta t} over [a, b) at level c is c*(e^{-beta a} - e^{-beta b}).
  const auto& u = profile.gaps;
  const auto& cnt = profile.cum_counts;
  double total = static_cast<double>(profile.n_max) * (1.0 - std::exp(-beta * u.front()));
  for (std::size_t i = 0; i + 1 < u.size(); ++i)
    total += static_cast<double>(cnt[i]) * (std::exp(-beta * u[i]) - std::exp(-beta * u[i + 1]));
  total += static_cast<double>(profile.n) * std::exp(-beta * u.back());
  return total;
}

}  // namespace gapcount

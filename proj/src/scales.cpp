#include "gapcount/scales.hpp"

#include <cmath>
#include <limits>

namespace gapcount {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log N_n(u)/u at every stored gap. accumulation_scale, contact_point and
// resolved_scale(., 0) all read these same values, so their agreement is
// bit-exact.
std::vector<double> gap_ratios(const GapProfile& p) {
  std::vector<double> r(p.gaps.size());
  for (std::size_t i = 0; i < p.gaps.size(); ++i)
    r[i] = std::log(static_cast<double>(p.cum_counts[i])) / p.gaps[i];
  return r;
}

}  // namespace

ScaleValue accumulation_scale(const GapProfile& profile) {
  if (profile.n_max >= 2) return {kInf, true, false};
  if (profile.gaps.empty()) return {0.0, false, true};  // n = 1: no competitors
  double best = -kInf;
  for (double r : gap_ratios(profile)) best = std::max(best, r);
  return {best, false, false};
}

ContactPoint contact_point(const GapProfile& profile, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::domain_error("contact_point requires finite eps >= 0");
  if (profile.n_max >= 2)
    throw std::domain_error("contact point undefined for tied profile (Lambda infinite)");
  if (profile.gaps.empty()) return {0.0, 0.0, true};

  const auto ratios = gap_ratios(profile);
  double lambda = -kInf;
  for (double r : ratios) lambda = std::max(lambda, r);

  // largest gap whose ratio clears the relative slack; the argmax always does
  const double floor = (1.0 - eps) * lambda;
  for (std::size_t i = profile.gaps.size(); i-- > 0;) {
    if (ratios[i] >= floor) {
      ContactPoint cp;
      cp.delta = profile.gaps[i];
      cp.alpha = std::log(static_cast<double>(profile.cum_counts[i])) /
                 std::log(static_cast<double>(profile.n));
      return cp;
    }
  }
  throw estimation_error("contact point scan failed");  // unreachable
}

ContactTriple contact_triple(const GapProfile& profile, double eps) {
  ContactTriple t;
  t.n = profile.n;
  t.n_max = profile.n_max;
  const ScaleValue s = accumulation_scale(profile);
  if (s.infinite) {
    t.is_tie = true;
    t.lambda = kInf;
    return t;
  }
  if (s.degenerate) {
    t.degenerate = true;
    return t;
  }
  const ContactPoint cp = contact_point(profile, eps);
  t.lambda = s.value;
  t.delta = cp.delta;
  t.alpha = cp.alpha;
  t.C = s.value * cp.delta;
  return t;
}

ContactTriple contact_triple(const ScoreRow& row, double eps, double tie_abs_tol) {
  return contact_triple(gap_profile(row, tie_abs_tol), eps);
}

ScaleValue resolved_scale(const GapProfile& profile, double r) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::domain_error("resolved_scale requires finite r >= 0");
  // ties: N(t) >= n_max on (0, u_1), so the sup diverges once log n_max > r
  if (profile.n_max >= 2 && std::log(static_cast<double>(profile.n_max)) > r)
    return {kInf, true, false};
  double best = 0.0;  // sup over the empty set
  for (std::size_t i = 0; i < profile.gaps.size(); ++i) {
    const double ln = std::log(static_cast<double>(profile.cum_counts[i]));
    if (ln > r) best = std::max(best, (ln - r) / profile.gaps[i]);
  }
  return {best, false, false};
}

double laplace_envelope(const GapProfile& profile, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::domain_error("laplace_envelope requires finite beta > 0");
  // t = 0 term, then one candidate per jump (the sup of a step function
  // against a decreasing line sits at a left endpoint)
  double best = std::log(static_cast<double>(profile.n_max));
  for (std::size_t i = 0; i < profile.gaps.size(); ++i)
    best = std::max(best, std::log(static_cast<double>(profile.cum_counts[i])) -
                              beta * profile.gaps[i]);
  return best;
}

double profile_log_z(const GapProfile& profile, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw std::domain_error("profile_log_z requires finite beta >= 0");
  double acc = static_cast<double>(profile.n_max) - 1.0;
  std::int64_t prev = profile.n_max;
  for (std::size_t i = 0; i < profile.gaps.size(); ++i) {
    acc += static_cast<double>(profile.cum_counts[i] - prev) * std::exp(-beta * profile.gaps[i]);
    prev = profile.cum_counts[i];
  }
  return std::log1p(acc);
}

ScaleValue rank_boundary(const GapProfile& profile, double r) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::domain_error("rank_boundary requires finite r >= 0");
  const double log_n = std::log(static_cast<double>(profile.n));
  if (r > log_n)
    throw std::domain_error("rank_boundary: r exceeds log n (unattainable, Z(0) = n)");
  // log Z decreases to log n_max (never attained), so the sup is infinite
  // exactly when r <= log n_max; this covers r = 0 on non-tied rows.
  if (r <= std::log(static_cast<double>(profile.n_max))) return {kInf, true, false};

  // bracket: log Z(0) = log n >= r; double hi until log Z(hi) < r
  double lo = 0.0;
  double hi = 1.0;
  {
    const ScaleValue s = accumulation_scale(profile);
    if (!s.infinite && !s.degenerate) hi = s.value + 1.0;
  }
  while (profile_log_z(profile, hi) >= r) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (profile_log_z(profile, mid) >= r)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), false, false};
}

}  // namespace gapcount

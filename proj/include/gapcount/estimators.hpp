#pragma once

// Aggregation of per-row contact triples into per-cell exponent estimates:
// bucket means over an n-grid, OLS slopes on log log n, bootstrap half-IQR
// intervals, power-family fits for inverse-temperature vectors, and the
// gamma / collapse sweeps.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gapcount/row.hpp"
#include "gapcount/scales.hpp"

namespace gapcount {

enum class Coord { lambda, alpha, delta };
enum class Weighting { plain, count };  // plain bucket OLS, or count-weighted
enum class MetaField { layer, head, seq, query_pos };

const char* coord_name(Coord c);

/// One experimental condition: an id, the context lengths sampled in it, and
/// which metadata fields form the bootstrap resampling unit.
struct Cell {
  std::string id;
  std::vector<std::int64_t> n_grid;   // strictly ascending, all >= 2
  std::vector<MetaField> tuple_key;   // e.g. {layer, head}
};

struct TripleRecord {
  RowMeta meta;
  ContactTriple triple;
};

struct BucketPoint {
  std::int64_t n = 0;
  double mean_log_lambda = 0.0;
  double mean_log_alpha = 0.0;
  double mean_log_delta = 0.0;
  std::int64_t count = 0;      // surviving (included) rows
  std::int64_t tie_count = 0;  // excluded rows at this n
  bool valid() const { return count >= 1; }
};

struct BucketSeries {
  std::vector<BucketPoint> points;  // one per n_grid entry, grid order
  bool has_empty = false;           // some grid point had zero survivors
  std::int64_t valid_points() const;
};

/// Per-n means of log Lambda / log alpha / log delta over surviving rows.
/// Excluded (and counted in tie_count): exact ties, degenerate rows, and rows
/// with finite Lambda but log10(Lambda) > tie_log10_threshold. Rows whose n is
/// not on the cell's grid are ignored. Grid points with zero survivors are
/// flagged and later omitted from fits.
BucketSeries bucket_series(const Cell& cell, const std::vector<TripleRecord>& records,
                           double tie_log10_threshold = kTieLog10Threshold);

struct ExponentFit {
  double slope = 0.0;  // the exponent estimate
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::int64_t n_points = 0;
};

/// OLS of y on log log n. Weights (optional) give the count-weighted variant.
/// Fewer than 2 points -> estimation_error.
ExponentFit ols_loglog(const std::vector<std::int64_t>& ns, const std::vector<double>& y,
                       const std::vector<double>* weights = nullptr);
ExponentFit ols_loglog(const BucketSeries& series, Coord coord,
                       Weighting weighting = Weighting::plain);

/// xi_lambda - (xi_alpha - xi_delta + 1). Zero (to fp) whenever the three
/// fits share the same points and weights, because the contact formula makes
/// log Lambda = log alpha + log log n - log delta row-wise and OLS is linear.
double decomposition_residual(const ExponentFit& lam, const ExponentFit& alp,
                              const ExponentFit& del);

struct BootstrapResult {
  std::int64_t B = 0;
  std::uint64_t seed = 0;
  double half_iqr = 0.0;
  double point_estimate = 0.0;
};

struct CoordBootstrap {
  BootstrapResult lambda, alpha, delta;
};

/// Tuple bootstrap of the bucket-mean slope: each draw resamples the cell's
/// tuple set with replacement (a tuple drawn k times contributes its rows k
/// times), recomputes bucket means, refits, and the half-IQR of the B slopes
/// is the interval half-width. Draws are addressed by the counter-based RNG at
/// (seed, draw, slot), so results are bit-identical for any worker count; the
/// three coordinates share the same draws.
CoordBootstrap bootstrap_all(const Cell& cell, const std::vector<TripleRecord>& records,
                             std::int64_t B, std::uint64_t seed,
                             Weighting weighting = Weighting::plain,
                             double tie_log10_threshold = kTieLog10Threshold, int threads = 1);

BootstrapResult bootstrap_halfiqr(const Cell& cell, const std::vector<TripleRecord>& records,
                                  Coord statistic, std::int64_t B, std::uint64_t seed,
                                  Weighting weighting = Weighting::plain,
                                  double tie_log10_threshold = kTieLog10Threshold,
                                  int threads = 1);

// --- power-family fits of an inverse-temperature vector --------------------

struct PowerGridFit {
  double xi_star = 0.0;  // grid argmin (smallest on ties)
  double a1 = 0.0;
  double a2 = 0.0;  // 0 when bias_free
  std::vector<double> grid;
  std::vector<double> mse;  // per-point MSE at each grid xi
};

/// Grid over [0, 4] with step 0.05.
std::vector<double> default_xi_grid();

/// Value-space least squares of beta_n against a1 (log n)^xi (+ a2 unless
/// bias_free) for each xi on the grid. domain (empty = all) selects which n
/// enter the fit. Empty selection -> estimation_error.
PowerGridFit power_fit_grid(const std::vector<std::int64_t>& ns, const std::vector<double>& beta,
                            const std::vector<std::int64_t>& domain,
                            const std::vector<double>& grid, bool bias_free);

/// Continuous exponent: OLS of log beta_n on log log n at the given points.
/// Requires beta > 0 on the selection.
ExponentFit power_fit_ols(const std::vector<std::int64_t>& ns, const std::vector<double>& beta,
                          const std::vector<std::int64_t>& points = {});

/// Residual bootstrap of the bias-free power fit at fixed xi: resamples the
/// residuals across positions, refits a1, recomputes the per-point MSE.
/// half_iqr is reported relative to the point-estimate MSE (0 when that is 0).
BootstrapResult residual_bootstrap_mse(const std::vector<std::int64_t>& ns,
                                       const std::vector<double>& beta, double xi,
                                       const std::vector<std::int64_t>& domain, std::int64_t B,
                                       std::uint64_t seed);

// --- sweeps -----------------------------------------------------------------

struct GammaPoint {
  double gamma = 0.0;
  double median_p_star = 0.0;
  double frac_below_inv_log_n = 0.0;  // fraction of rows with p* <= 1/log n
  std::int64_t rows_used = 0;
};

/// {0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0}
std::vector<double> default_gamma_grid();

/// Per gamma, evaluates each row's p* = 1/Z at beta = gamma * Lambda_row.
/// Tied and degenerate rows are excluded. Median p* is non-decreasing in
/// gamma (Z is non-increasing in beta row-wise).
std::vector<GammaPoint> gamma_sweep(const std::vector<ScoreRow>& rows,
                                    const std::vector<double>& gammas, double tie_abs_tol = 0.0);

using RowGenerator = std::function<ScoreRow(std::int64_t)>;

struct CollapsePoint {
  double s = 0.0;
  std::int64_t n = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double entropy = 0.0;
  double top_two_gap = 0.0;
  double spread = 0.0;
  double Z = 0.0;
};

/// Sub/supercritical trajectories: for each s and n, generates the row,
/// sets beta = s * Lambda, and records the collapse observables.
std::vector<CollapsePoint> collapse_sweep(const RowGenerator& family,
                                          const std::vector<double>& s_values,
                                          const std::vector<std::int64_t>& n_grid);

}  // namespace gapcount

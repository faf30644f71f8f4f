#include "gapcount/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace gapcount {

namespace {

void validate_cell(const Cell& cell) {
  if (cell.n_grid.empty()) throw input_error("cell '" + cell.id + "': empty n-grid");
  for (std::size_t i = 0; i < cell.n_grid.size(); ++i) {
    if (cell.n_grid[i] < 2)
      throw input_error("cell '" + cell.id + "': n-grid values must be >= 2");
    if (i > 0 && cell.n_grid[i] <= cell.n_grid[i - 1])
      throw input_error("cell '" + cell.id + "': n-grid must be strictly ascending");
  }
}

bool excluded_row(const ContactTriple& t, double lambda_cap) {
  return t.is_tie || t.degenerate || t.lambda > lambda_cap;
}

std::string tuple_id(const RowMeta& m, const std::vector<MetaField>& key) {
  std::string id;
  for (MetaField f : key) {
    switch (f) {
      case MetaField::layer: id += 'L' + std::to_string(m.layer); break;
      case MetaField::head: id += 'H' + std::to_string(m.head); break;
      case MetaField::seq: id += 'S' + m.seq_id; break;
      case MetaField::query_pos: id += 'Q' + std::to_string(m.query_pos); break;
    }
    id += '\x1f';
  }
  return id;
}

struct LinePoints {
  std::vector<double> x, y, w;
};

ExponentFit linear_fit(const LinePoints& pts) {
  const std::size_t k = pts.x.size();
  if (k < 2) throw estimation_error("fit requires at least 2 points");
  double wsum = 0, xbar = 0, ybar = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double wi = pts.w.empty() ? 1.0 : pts.w[i];
    wsum += wi;
    xbar += wi * pts.x[i];
    ybar += wi * pts.y[i];
  }
  xbar /= wsum;
  ybar /= wsum;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double wi = pts.w.empty() ? 1.0 : pts.w[i];
    sxx += wi * (pts.x[i] - xbar) * (pts.x[i] - xbar);
    sxy += wi * (pts.x[i] - xbar) * (pts.y[i] - ybar);
  }
  if (sxx <= 0.0) throw estimation_error("fit abscissa is degenerate");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.n_points = static_cast<std::int64_t>(k);
  if (k > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double wi = pts.w.empty() ? 1.0 : pts.w[i];
      const double r = pts.y[i] - fit.slope * pts.x[i] - fit.intercept;
      rss += wi * r * r;
    }
    fit.stderr_slope = std::sqrt(rss / (static_cast<double>(k - 2) * sxx));
  }
  return fit;
}

double loglog(std::int64_t n) { return std::log(std::log(static_cast<double>(n))); }

// Selection of (ns, beta) pairs restricted to a domain (empty = all).
std::vector<std::size_t> select_domain(const std::vector<std::int64_t>& ns,
                                       const std::vector<std::int64_t>& domain) {
  if (ns.empty()) throw estimation_error("empty inverse-temperature vector");
  std::vector<std::size_t> idx;
  if (domain.empty()) {
    idx.resize(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) idx[i] = i;
  } else {
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (std::find(domain.begin(), domain.end(), ns[i]) != domain.end()) idx.push_back(i);
  }
  if (idx.empty()) throw estimation_error("domain selects no points");
  for (std::size_t i : idx)
    if (ns[i] < 2) throw input_error("power fits require n >= 2");
  return idx;
}

}  // namespace

const char* coord_name(Coord c) {
  switch (c) {
    case Coord::lambda: return "lambda";
    case Coord::alpha: return "alpha";
    case Coord::delta: return "delta";
  }
  return "?";
}

std::int64_t BucketSeries::valid_points() const {
  std::int64_t k = 0;
  for (const auto& p : points)
    if (p.valid()) ++k;
  return k;
}

BucketSeries bucket_series(const Cell& cell, const std::vector<TripleRecord>& records,
                           double tie_log10_threshold) {
  validate_cell(cell);
  const double lambda_cap = std::pow(10.0, tie_log10_threshold);

  std::unordered_map<std::int64_t, std::size_t> grid_index;
  for (std::size_t i = 0; i < cell.n_grid.size(); ++i) grid_index.emplace(cell.n_grid[i], i);

  BucketSeries series;
  series.points.resize(cell.n_grid.size());
  std::vector<double> sl(cell.n_grid.size(), 0.0), sa(cell.n_grid.size(), 0.0),
      sd(cell.n_grid.size(), 0.0);
  for (std::size_t i = 0; i < cell.n_grid.size(); ++i) series.points[i].n = cell.n_grid[i];

  for (const auto& rec : records) {
    const auto it = grid_index.find(rec.meta.n);
    if (it == grid_index.end()) continue;  // off-grid rows are ignored
    auto& pt = series.points[it->second];
    if (excluded_row(rec.triple, lambda_cap)) {
      ++pt.tie_count;
      continue;
    }
    ++pt.count;
    sl[it->second] += std::log(rec.triple.lambda);
    sa[it->second] += std::log(rec.triple.alpha);
    sd[it->second] += std::log(rec.triple.delta);
  }
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    auto& pt = series.points[i];
    if (pt.count >= 1) {
      pt.mean_log_lambda = sl[i] / static_cast<double>(pt.count);
      pt.mean_log_alpha = sa[i] / static_cast<double>(pt.count);
      pt.mean_log_delta = sd[i] / static_cast<double>(pt.count);
    } else {
      series.has_empty = true;
    }
  }
  return series;
}

ExponentFit ols_loglog(const std::vector<std::int64_t>& ns, const std::vector<double>& y,
                       const std::vector<double>* weights) {
  if (ns.size() != y.size() || (weights && weights->size() != ns.size()))
    throw input_error("ols_loglog: mismatched input lengths");
  LinePoints pts;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 2) throw input_error("ols_loglog requires n >= 2");
    pts.x.push_back(loglog(ns[i]));
    pts.y.push_back(y[i]);
    if (weights) pts.w.push_back((*weights)[i]);
  }
  return linear_fit(pts);
}

ExponentFit ols_loglog(const BucketSeries& series, Coord coord, Weighting weighting) {
  std::vector<std::int64_t> ns;
  std::vector<double> y, w;
  for (const auto& pt : series.points) {
    if (!pt.valid()) continue;
    ns.push_back(pt.n);
    switch (coord) {
      case Coord::lambda: y.push_back(pt.mean_log_lambda); break;
      case Coord::alpha: y.push_back(pt.mean_log_alpha); break;
      case Coord::delta: y.push_back(pt.mean_log_delta); break;
    }
    w.push_back(static_cast<double>(pt.count));
  }
  return ols_loglog(ns, y, weighting == Weighting::count ? &w : nullptr);
}

double decomposition_residual(const ExponentFit& lam, const ExponentFit& alp,
                              const ExponentFit& del) {
  return lam.slope - (alp.slope - del.slope + 1.0);
}

// ---------------------------------------------------------------------------
// Tuple bootstrap
// ---------------------------------------------------------------------------

namespace {

struct BootstrapPrep {
  // per grid point: surviving rows as (tuple index, logs)
  struct Point {
    double x = 0.0;  // log log n
    std::vector<std::uint32_t> tuple;
    std::vector<double> llam, lalp, ldel;
  };
  std::vector<Point> points;
  std::size_t n_tuples = 0;
};

BootstrapPrep prepare_bootstrap(const Cell& cell, const std::vector<TripleRecord>& records,
                                double tie_log10_threshold) {
  validate_cell(cell);
  if (cell.tuple_key.empty()) throw input_error("cell '" + cell.id + "': empty tuple key");
  const double lambda_cap = std::pow(10.0, tie_log10_threshold);

  std::unordered_map<std::int64_t, std::size_t> grid_index;
  for (std::size_t i = 0; i < cell.n_grid.size(); ++i) grid_index.emplace(cell.n_grid[i], i);

  BootstrapPrep prep;
  prep.points.resize(cell.n_grid.size());
  for (std::size_t i = 0; i < cell.n_grid.size(); ++i) prep.points[i].x = loglog(cell.n_grid[i]);

  // the tuple set spans all of the cell's on-grid rows, in first-appearance order
  std::unordered_map<std::string, std::uint32_t> tuples;
  for (const auto& rec : records) {
    const auto it = grid_index.find(rec.meta.n);
    if (it == grid_index.end()) continue;
    const auto [t_it, _] =
        tuples.emplace(tuple_id(rec.meta, cell.tuple_key), static_cast<std::uint32_t>(tuples.size()));
    if (excluded_row(rec.triple, lambda_cap)) continue;
    auto& pt = prep.points[it->second];
    pt.tuple.push_back(t_it->second);
    pt.llam.push_back(std::log(rec.triple.lambda));
    pt.lalp.push_back(std::log(rec.triple.alpha));
    pt.ldel.push_back(std::log(rec.triple.delta));
  }
  prep.n_tuples = tuples.size();
  if (prep.n_tuples == 0) throw estimation_error("cell '" + cell.id + "': empty tuple set");
  return prep;
}

struct DrawSlopes {
  double lam = 0, alp = 0, del = 0;
  bool ok = false;
};

// multiplicity[t] = how often tuple t was drawn; unit multiplicities recover
// the plain bucket-series fit
DrawSlopes eval_draw(const BootstrapPrep& prep, const std::vector<std::uint32_t>& multiplicity,
                     Weighting weighting) {
  LinePoints lam, alp, del;
  for (const auto& pt : prep.points) {
    double wsum = 0, slam = 0, salp = 0, sdel = 0;
    for (std::size_t i = 0; i < pt.tuple.size(); ++i) {
      const double m = multiplicity[pt.tuple[i]];
      if (m == 0.0) continue;
      wsum += m;
      slam += m * pt.llam[i];
      salp += m * pt.lalp[i];
      sdel += m * pt.ldel[i];
    }
    if (wsum == 0.0) continue;  // grid point lost all rows in this draw
    const double w = weighting == Weighting::count ? wsum : 1.0;
    lam.x.push_back(pt.x);
    lam.y.push_back(slam / wsum);
    lam.w.push_back(w);
    alp.x.push_back(pt.x);
    alp.y.push_back(salp / wsum);
    alp.w.push_back(w);
    del.x.push_back(pt.x);
    del.y.push_back(sdel / wsum);
    del.w.push_back(w);
  }
  DrawSlopes out;
  if (lam.x.size() < 2) return out;
  out.lam = linear_fit(lam).slope;
  out.alp = linear_fit(alp).slope;
  out.del = linear_fit(del).slope;
  out.ok = true;
  return out;
}

double half_iqr_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return half_iqr_sorted(v);
}

}  // namespace

CoordBootstrap bootstrap_all(const Cell& cell, const std::vector<TripleRecord>& records,
                             std::int64_t B, std::uint64_t seed, Weighting weighting,
                             double tie_log10_threshold, int threads) {
  if (B < 1) throw input_error("bootstrap requires B >= 1");
  const BootstrapPrep prep = prepare_bootstrap(cell, records, tie_log10_threshold);

  std::vector<std::uint32_t> unit(prep.n_tuples, 1);
  const DrawSlopes point = eval_draw(prep, unit, weighting);
  if (!point.ok)
    throw estimation_error("cell '" + cell.id + "': fewer than 2 grid points with surviving rows");

  std::vector<DrawSlopes> draws(static_cast<std::size_t>(B));
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    std::vector<std::uint32_t> mult(prep.n_tuples, 0);
    for (std::size_t k = 0; k < prep.n_tuples; ++k)
      ++mult[rng_index(seed, b, k, prep.n_tuples)];
    draws[b] = eval_draw(prep, mult, weighting);
  });

  std::vector<double> lam, alp, del;
  for (const auto& d : draws) {
    if (!d.ok) continue;  // draw left < 2 grid points; dropped deterministically
    lam.push_back(d.lam);
    alp.push_back(d.alp);
    del.push_back(d.del);
  }
  if (lam.empty()) throw estimation_error("cell '" + cell.id + "': no usable bootstrap draws");

  CoordBootstrap out;
  out.lambda = {B, seed, half_iqr_of(lam), point.lam};
  out.alpha = {B, seed, half_iqr_of(alp), point.alp};
  out.delta = {B, seed, half_iqr_of(del), point.del};
  return out;
}

BootstrapResult bootstrap_halfiqr(const Cell& cell, const std::vector<TripleRecord>& records,
                                  Coord statistic, std::int64_t B, std::uint64_t seed,
                                  Weighting weighting, double tie_log10_threshold, int threads) {
  const CoordBootstrap all =
      bootstrap_all(cell, records, B, seed, weighting, tie_log10_threshold, threads);
  switch (statistic) {
    case Coord::lambda: return all.lambda;
    case Coord::alpha: return all.alpha;
    case Coord::delta: return all.delta;
  }
  return all.lambda;
}

// ---------------------------------------------------------------------------
// Power-family fits
// ---------------------------------------------------------------------------

std::vector<double> default_xi_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 80; ++i) g.push_back(static_cast<double>(i) * 0.05);
  return g;
}

PowerGridFit power_fit_grid(const std::vector<std::int64_t>& ns, const std::vector<double>& beta,
                            const std::vector<std::int64_t>& domain,
                            const std::vector<double>& grid, bool bias_free) {
  if (ns.size() != beta.size()) throw input_error("power_fit_grid: mismatched input lengths");
  if (grid.empty()) throw input_error("power_fit_grid: empty xi grid");
  const auto idx = select_domain(ns, domain);
  const double k = static_cast<double>(idx.size());

  PowerGridFit out;
  out.grid = grid;
  out.mse.resize(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double xi = grid[g];
    double a1 = 0, a2 = 0;
    double sxx = 0, sxy = 0, sx = 0, sy = 0;
    for (std::size_t i : idx) {
      const double x = std::pow(std::log(static_cast<double>(ns[i])), xi);
      sxx += x * x;
      sxy += x * beta[i];
      sx += x;
      sy += beta[i];
    }
    if (bias_free) {
      if (sxx <= 0.0) throw estimation_error("power_fit_grid: degenerate regressor");
      a1 = sxy / sxx;
    } else {
      const double det = k * sxx - sx * sx;
      if (det <= 1e-12 * std::max(k * sxx, 1e-300)) {
        // regressor collinear with the intercept (e.g. xi = 0): constant fit
        a1 = 0.0;
        a2 = sy / k;
      } else {
        a1 = (k * sxy - sx * sy) / det;
        a2 = (sxx * sy - sx * sxy) / det;
      }
    }
    double sse = 0;
    for (std::size_t i : idx) {
      const double x = std::pow(std::log(static_cast<double>(ns[i])), xi);
      const double r = beta[i] - a1 * x - a2;
      sse += r * r;
    }
    out.mse[g] = sse / k;
    if (out.mse[g] < best) {  // strict <: ties resolve to the smallest xi
      best = out.mse[g];
      out.xi_star = xi;
      out.a1 = a1;
      out.a2 = a2;
    }
  }
  return out;
}

ExponentFit power_fit_ols(const std::vector<std::int64_t>& ns, const std::vector<double>& beta,
                          const std::vector<std::int64_t>& points) {
  if (ns.size() != beta.size()) throw input_error("power_fit_ols: mismatched input lengths");
  const auto idx = select_domain(ns, points);
  LinePoints pts;
  for (std::size_t i : idx) {
    if (!(beta[i] > 0.0))
      throw estimation_error("power_fit_ols requires positive beta values on the domain");
    pts.x.push_back(loglog(ns[i]));
    pts.y.push_back(std::log(beta[i]));
  }
  return linear_fit(pts);
}

BootstrapResult residual_bootstrap_mse(const std::vector<std::int64_t>& ns,
                                       const std::vector<double>& beta, double xi,
                                       const std::vector<std::int64_t>& domain, std::int64_t B,
                                       std::uint64_t seed) {
  if (ns.size() != beta.size()) throw input_error("residual_bootstrap_mse: mismatched lengths");
  if (B < 1) throw input_error("residual bootstrap requires B >= 1");
  const auto idx = select_domain(ns, domain);
  const std::size_t k = idx.size();

  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = std::pow(std::log(static_cast<double>(ns[idx[i]])), xi);
    y[i] = beta[idx[i]];
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx <= 0.0) throw estimation_error("residual bootstrap: degenerate regressor");
  const double a1 = sxy / sxx;

  std::vector<double> resid(k);
  double sse = 0;
  for (std::size_t i = 0; i < k; ++i) {
    resid[i] = y[i] - a1 * x[i];
    sse += resid[i] * resid[i];
  }
  const double mse0 = sse / static_cast<double>(k);

  std::vector<double> mses(static_cast<std::size_t>(B));
  for (std::int64_t b = 0; b < B; ++b) {
    double rsxy = 0;
    std::vector<double> ystar(k);
    for (std::size_t i = 0; i < k; ++i) {
      ystar[i] = a1 * x[i] + resid[rng_index(seed, static_cast<std::uint64_t>(b), i, k)];
      rsxy += x[i] * ystar[i];
    }
    const double a1b = rsxy / sxx;
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = ystar[i] - a1b * x[i];
      s += r * r;
    }
    mses[static_cast<std::size_t>(b)] = s / static_cast<double>(k);
  }
  std::sort(mses.begin(), mses.end());
  BootstrapResult out;
  out.B = B;
  out.seed = seed;
  out.point_estimate = mse0;
  out.half_iqr = mse0 > 0.0 ? half_iqr_sorted(mses) / mse0 : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::vector<double> default_gamma_grid() { return {0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0}; }

std::vector<GammaPoint> gamma_sweep(const std::vector<ScoreRow>& rows,
                                    const std::vector<double>& gammas, double tie_abs_tol) {
  if (gammas.empty()) throw input_error("gamma_sweep: empty gamma grid");
  for (double g : gammas)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::domain_error("gamma values must be >= 0");

  std::vector<std::vector<double>> pstar(gammas.size());
  std::vector<std::vector<bool>> below(gammas.size());
  std::int64_t used = 0;
  for (const auto& row : rows) {
    const GapProfile profile = gap_profile(row, tie_abs_tol);
    const ScaleValue lam = accumulation_scale(profile);
    if (lam.infinite || lam.degenerate) continue;  // exact-tie and n = 1 rows excluded
    ++used;
    const double inv_log_n = 1.0 / std::log(static_cast<double>(profile.n));
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      const double p = 1.0 / std::exp(profile_log_z(profile, gammas[g] * lam.value));
      pstar[g].push_back(p);
      below[g].push_back(p <= inv_log_n);
    }
  }
  if (used == 0) throw estimation_error("gamma_sweep: no non-tied rows");

  std::vector<GammaPoint> out(gammas.size());
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    std::sort(pstar[g].begin(), pstar[g].end());
    std::int64_t k = 0;
    for (bool b : below[g])
      if (b) ++k;
    out[g] = {gammas[g], quantile_sorted(pstar[g], 0.5),
              static_cast<double>(k) / static_cast<double>(used), used};
  }
  return out;
}

std::vector<CollapsePoint> collapse_sweep(const RowGenerator& family,
                                          const std::vector<double>& s_values,
                                          const std::vector<std::int64_t>& n_grid) {
  if (!family) throw input_error("collapse_sweep: missing family generator");
  if (s_values.empty() || n_grid.empty())
    throw input_error("collapse_sweep: empty s grid or n grid");
  for (double s : s_values)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("s values must be >= 0");

  struct Generated {
    ScoreRow row;
    double lambda;
  };
  std::vector<Generated> rows;
  rows.reserve(n_grid.size());
  for (std::int64_t n : n_grid) {
    ScoreRow row = family(n);
    const ScaleValue lam = accumulation_scale(gap_profile(row));
    if (lam.infinite || lam.degenerate)
      throw estimation_error("collapse_sweep: family produced a tied or degenerate row at n=" +
                             std::to_string(n));
    rows.push_back({std::move(row), lam.value});
  }

  std::vector<CollapsePoint> out;
  out.reserve(s_values.size() * n_grid.size());
  for (double s : s_values) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double beta = s * rows[i].lambda;
      const SoftmaxResult sm = softmax(rows[i].row, beta);
      const Observables ob = observables(sm);
      out.push_back({s, n_grid[i], rows[i].lambda, beta, ob.entropy, ob.top_two_gap, ob.spread,
                     sm.Z});
    }
  }
  return out;
}

}  // namespace gapcount

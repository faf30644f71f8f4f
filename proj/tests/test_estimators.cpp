#include <doctest.h>

#include <cmath>
#include <vector>

#include "gapcount/estimators.hpp"
#include "gapcount/families.hpp"
#include "test_util.hpp"

using namespace gapcount;

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

TripleRecord rec_of(ScoreRow row, int head = 0, int layer = 0) {
  row.meta.head = head;
  row.meta.layer = layer;
  return {row.meta, contact_triple(row)};
}

Cell test_cell(std::vector<std::int64_t> grid) {
  return Cell{"test", std::move(grid), {MetaField::layer, MetaField::head}};
}

// simplex family with delta = (log n)^{1-xi}, one row per grid point
std::vector<TripleRecord> planted_simplex(const std::vector<std::int64_t>& grid, double xi) {
  std::vector<TripleRecord> recs;
  for (std::int64_t n : grid) {
    const double delta = std::pow(std::log(static_cast<double>(n)), 1.0 - xi);
    recs.push_back(rec_of(simplex_row({n, std::max(delta, 1.0), delta})));
  }
  return recs;
}

const std::vector<std::int64_t> kWideGrid = {1 << 10, 1 << 12, 1 << 14,
                                             1 << 16, 1 << 18, 1 << 20};

}  // namespace

TEST_CASE("bucket series: frozen simplex means, exclusions, empty grid points") {
  const Cell cell = test_cell({16, 256});
  std::vector<TripleRecord> recs;
  recs.push_back(rec_of(simplex_row({16, 2.0, 1.0})));
  recs.push_back(rec_of(simplex_row({256, 2.0, 1.0})));
  const BucketSeries series = bucket_series(cell, recs);
  REQUIRE(series.points.size() == 2);
  CHECK(rel_close(series.points[0].mean_log_lambda, 1.0197814405382263, 1e-13));  // loglog 16
  CHECK(rel_close(series.points[1].mean_log_lambda, 1.7129286210981716, 1e-13));  // loglog 256
  CHECK(series.points[0].count == 1);
  CHECK(!series.has_empty);

  SUBCASE("identical rows average to the single-row value") {
    recs.push_back(rec_of(simplex_row({16, 2.0, 1.0}), 1));
    const BucketSeries dup = bucket_series(cell, recs);
    CHECK(dup.points[0].count == 2);
    CHECK(rel_close(dup.points[0].mean_log_lambda, 1.0197814405382263, 1e-13));
  }

  SUBCASE("tied rows empty out a grid point") {
    std::vector<TripleRecord> tied;
    tied.push_back(rec_of(make_row(std::vector<double>(16, 3.0))));
    tied.push_back(rec_of(simplex_row({256, 2.0, 1.0})));
    const BucketSeries s = bucket_series(cell, tied);
    CHECK(s.has_empty);
    CHECK(s.points[0].count == 0);
    CHECK(s.points[0].tie_count == 1);
    CHECK(s.valid_points() == 1);
  }

  SUBCASE("finite lambda above the log10 threshold is excluded") {
    std::vector<double> steep(16, -1e-6);
    steep[0] = 0.0;  // lambda = log2/1e-6 ~ 6.9e5 > 1e5
    std::vector<TripleRecord> mixed;
    mixed.push_back(rec_of(make_row(std::move(steep))));
    mixed.push_back(rec_of(simplex_row({16, 2.0, 1.0}), 1));
    const BucketSeries s = bucket_series(cell, mixed);
    CHECK(s.points[0].count == 1);
    CHECK(s.points[0].tie_count == 1);
    // a larger threshold readmits the row
    const BucketSeries loose = bucket_series(cell, mixed, 7.0);
    CHECK(loose.points[0].count == 2);
    CHECK(loose.points[0].tie_count == 0);
  }

  SUBCASE("off-grid rows are ignored") {
    recs.push_back(rec_of(simplex_row({64, 2.0, 1.0})));
    const BucketSeries s = bucket_series(cell, recs);
    CHECK(s.points[0].count + s.points[1].count == 2);
  }
}

TEST_CASE("ols on loglog n: exact lines and planted families") {
  std::vector<std::int64_t> ns = {16, 64, 256, 1024};
  std::vector<double> y;
  for (std::int64_t n : ns) y.push_back(2.0 * std::log(std::log(static_cast<double>(n))) + 7.0);
  const ExponentFit fit = ols_loglog(ns, y);
  CHECK(rel_close(fit.slope, 2.0, 1e-13));
  CHECK(rel_close(fit.intercept, 7.0, 1e-12));
  CHECK(fit.stderr_slope <= 1e-12);
  CHECK(fit.n_points == 4);

  CHECK_THROWS_AS(ols_loglog({16}, {1.0}), estimation_error);

  for (double xi : {0.5, 1.0, 1.5, 2.0}) {
    const BucketSeries series = bucket_series(test_cell(kWideGrid), planted_simplex(kWideGrid, xi));
    CHECK(std::abs(ols_loglog(series, Coord::lambda).slope - xi) <= 1e-10);
  }
}

TEST_CASE("block family recovers (1.5, -1, -1.5) and a zero residual") {
  std::vector<TripleRecord> recs;
  for (std::int64_t n : kWideGrid) {
    const double log_n = std::log(static_cast<double>(n));
    BlockConfig cfg;
    cfg.n = n;
    cfg.m = 2;
    cfg.delta = std::log(2.0) * std::pow(log_n, -1.5);
    cfg.tau = 2.0 * std::pow(log_n, -0.5);
    cfg.r_sq = 1.0;
    recs.push_back(rec_of(block_row(cfg)));
  }
  const BucketSeries series = bucket_series(test_cell(kWideGrid), recs);
  const ExponentFit fl = ols_loglog(series, Coord::lambda);
  const ExponentFit fa = ols_loglog(series, Coord::alpha);
  const ExponentFit fd = ols_loglog(series, Coord::delta);
  CHECK(std::abs(fl.slope - 1.5) <= 1e-10);
  CHECK(std::abs(fa.slope + 1.0) <= 1e-10);
  CHECK(std::abs(fd.slope + 1.5) <= 1e-10);
  CHECK(std::abs(decomposition_residual(fl, fa, fd)) <= 1e-10);

  // mismatched point sets may leave a nonzero residual; it is only reported
  const Cell shorter = test_cell({1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18});
  const ExponentFit fl2 = ols_loglog(bucket_series(shorter, recs), Coord::lambda);
  CHECK(std::isfinite(decomposition_residual(fl2, fa, fd)));
}

TEST_CASE("bootstrap: degenerate spreads, determinism across repeats and workers") {
  const std::vector<std::int64_t> grid = {64, 256, 1024};
  const Cell cell = test_cell(grid);

  SUBCASE("identical rows per tuple give zero half-IQR") {
    std::vector<TripleRecord> recs;
    for (std::int64_t n : grid)
      for (int h = 0; h < 4; ++h) recs.push_back(rec_of(simplex_row({n, 2.0, 1.0}), h));
    const CoordBootstrap boot = bootstrap_all(cell, recs, 50, 123);
    CHECK(boot.lambda.half_iqr == 0.0);
    CHECK(boot.alpha.half_iqr == 0.0);
    CHECK(boot.delta.half_iqr == 0.0);
    CHECK(rel_close(boot.lambda.point_estimate, 1.0, 1e-12));  // lambda = log n
  }

  SUBCASE("B = 1 gives zero half-IQR") {
    std::vector<TripleRecord> recs;
    for (std::int64_t n : grid)
      for (int h = 0; h < 3; ++h) recs.push_back(rec_of(simplex_row({n, 2.0, 1.0 + 0.2 * h}), h));
    const BootstrapResult one = bootstrap_halfiqr(cell, recs, Coord::lambda, 1, 9);
    CHECK(one.half_iqr == 0.0);
    CHECK(one.B == 1);
  }

  SUBCASE("heterogeneous tuples: positive spread, bit-identical reruns") {
    // per-head exponent xi_h, so resampling tuples moves the slope itself
    std::vector<TripleRecord> recs;
    for (std::int64_t n : grid)
      for (int h = 0; h < 8; ++h) {
        const double xi = 0.5 + 0.25 * h;
        const double delta = std::pow(std::log(static_cast<double>(n)), 1.0 - xi);
        recs.push_back(rec_of(simplex_row({n, std::max(delta, 1.0), delta}), h));
      }
    const CoordBootstrap a = bootstrap_all(cell, recs, 200, 77, Weighting::plain, 5.0, 1);
    const CoordBootstrap b = bootstrap_all(cell, recs, 200, 77, Weighting::plain, 5.0, 3);
    const CoordBootstrap c = bootstrap_all(cell, recs, 200, 77, Weighting::plain, 5.0, 1);
    CHECK(a.lambda.half_iqr > 0.0);
    CHECK(a.lambda.half_iqr == b.lambda.half_iqr);
    CHECK(a.lambda.half_iqr == c.lambda.half_iqr);
    CHECK(a.delta.half_iqr == b.delta.half_iqr);
    CHECK(a.lambda.point_estimate == b.lambda.point_estimate);
    const CoordBootstrap other = bootstrap_all(cell, recs, 200, 78, Weighting::plain, 5.0, 1);
    CHECK(other.lambda.half_iqr != a.lambda.half_iqr);
  }

  SUBCASE("empty tuple set is an estimation error") {
    CHECK_THROWS_AS(bootstrap_all(cell, {}, 10, 1), estimation_error);
  }
}

TEST_CASE("power grid fit: planted recovery, flat series, bias absorption") {
  const std::vector<std::int64_t> six = {64, 128, 256, 512, 768, 1024};

  std::vector<double> beta;
  for (std::int64_t n : six) beta.push_back(3.0 * std::sqrt(std::log(static_cast<double>(n))));
  const PowerGridFit planted = power_fit_grid(six, beta, {}, default_xi_grid(), true);
  CHECK(planted.xi_star == 0.5);
  CHECK(planted.mse[10] <= 1e-24);
  CHECK(rel_close(planted.a1, 3.0, 1e-12));
  CHECK(planted.grid.size() == 81);

  std::vector<double> flat(six.size(), 2.75);
  CHECK(power_fit_grid(six, flat, {}, default_xi_grid(), true).xi_star == 0.0);

  // a positive additive bias flattens the curve: the bias-free fit drifts
  // below the slope exponent, the free-bias fit recovers it
  std::vector<double> biased;
  for (std::int64_t n : six) biased.push_back(2.0 * std::log(static_cast<double>(n)) + 5.0);
  const PowerGridFit nofree = power_fit_grid(six, biased, {}, default_xi_grid(), true);
  CHECK(rel_close(nofree.xi_star, 0.70, 1e-12));
  const PowerGridFit free = power_fit_grid(six, biased, {}, default_xi_grid(), false);
  CHECK(rel_close(free.xi_star, 1.0, 1e-12));
  CHECK(free.mse[20] <= 1e-22);

  CHECK_THROWS_AS(power_fit_grid(six, beta, {7}, default_xi_grid(), true), estimation_error);
}

TEST_CASE("continuous power fit: exact recovery, two points, trim sensitivity") {
  const std::vector<std::int64_t> six = {64, 128, 256, 512, 768, 1024};
  std::vector<double> beta;
  for (std::int64_t n : six)
    beta.push_back(1.7 * std::pow(std::log(static_cast<double>(n)), 0.5));
  CHECK(std::abs(power_fit_ols(six, beta).slope - 0.5) <= 1e-12);

  const ExponentFit two = power_fit_ols({64, 1024}, {2.0, 8.0});
  const double expect = (std::log(8.0) - std::log(2.0)) /
                        (std::log(std::log(1024.0)) - std::log(std::log(64.0)));
  CHECK(rel_close(two.slope, expect, 1e-13));

  // convex small-n deviation: the fitted exponent grows with the trim threshold
  const std::vector<std::int64_t> grid = {16, 32, 64, 128, 256, 512, 1024};
  std::vector<double> bump;
  for (std::int64_t n : grid)
    bump.push_back(3.0 * std::sqrt(std::log(static_cast<double>(n))) *
                   (1.0 + 5.0 / static_cast<double>(n)));
  double prev = -1.0;
  for (std::int64_t trim : {16, 64, 256}) {
    std::vector<std::int64_t> domain;
    for (std::int64_t n : grid)
      if (n >= trim) domain.push_back(n);
    const double xi = power_fit_ols(grid, bump, domain).slope;
    CHECK(xi > prev);
    prev = xi;
  }
  CHECK(prev < 0.5);  // still below the asymptotic exponent on this window

  CHECK_THROWS_AS(power_fit_ols(six, std::vector<double>(six.size(), -1.0)), estimation_error);
}

TEST_CASE("residual bootstrap of the power-fit MSE") {
  const std::vector<std::int64_t> ns = {64, 128, 256, 512, 768, 1024};
  std::vector<double> clean;
  for (std::int64_t n : ns) clean.push_back(2.0 * std::sqrt(std::log(static_cast<double>(n))));
  const BootstrapResult zero = residual_bootstrap_mse(ns, clean, 0.5, {}, 200, 5);
  CHECK(zero.half_iqr == 0.0);
  CHECK(zero.point_estimate <= 1e-28);

  std::vector<double> noisy = clean;
  for (std::size_t i = 0; i < noisy.size(); ++i)
    noisy[i] += 0.05 * (testutil::uniform(31337, 0, i, -1.0, 1.0));
  const BootstrapResult a = residual_bootstrap_mse(ns, noisy, 0.5, {}, 200, 5);
  const BootstrapResult b = residual_bootstrap_mse(ns, noisy, 0.5, {}, 200, 5);
  const BootstrapResult c = residual_bootstrap_mse(ns, noisy, 0.5, {}, 200, 6);
  CHECK(a.half_iqr > 0.0);
  CHECK(a.half_iqr == b.half_iqr);  // same seed: bit-identical
  CHECK(c.half_iqr > 0.0);
  CHECK(std::abs(std::log(c.half_iqr / a.half_iqr)) < std::log(3.0));  // seed change: same scale
  CHECK(a.point_estimate > 0.0);
  CHECK(a.B == 200);
}

TEST_CASE("gamma sweep: closed-form medians, monotonicity, limits, exclusions") {
  // identical simplex rows: median p* at gamma = 1 is n/(2n-1)
  std::vector<ScoreRow> rows(5, simplex_row({1024, 2.0, 1.0}));
  const auto table = gamma_sweep(rows, {0.0, 1.0, 64.0});
  CHECK(rel_close(table[0].median_p_star, 1.0 / 1024.0, 1e-12));  // beta = 0: uniform
  CHECK(rel_close(table[1].median_p_star, 1024.0 / 2047.0, 1e-10));
  CHECK(table[2].median_p_star == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(table[0].rows_used == 5);

  // mixed rows: strict monotone medians, limit fractions, tie exclusion
  std::vector<ScoreRow> mixed;
  constexpr std::uint64_t seed = 2024;
  for (std::uint64_t i = 0; i < 64; ++i) {
    const std::int64_t n = 1 << (10 + rng_index(seed, i, 0, 9));
    const double delta = std::pow(10.0, testutil::uniform(seed, i, 1, -1.0, 1.0));
    mixed.push_back(simplex_row({n, std::max(1.0, delta), delta}));
  }
  mixed.push_back(make_row(std::vector<double>(64, 1.0)));  // tied: dropped
  const auto sweep = gamma_sweep(mixed, default_gamma_grid());
  CHECK(sweep.front().rows_used == 64);
  for (std::size_t g = 1; g < sweep.size(); ++g)
    CHECK(sweep[g].median_p_star > sweep[g - 1].median_p_star);
  CHECK(sweep.front().frac_below_inv_log_n == 1.0);
  CHECK(sweep.back().frac_below_inv_log_n == 0.0);

  CHECK_THROWS_AS(gamma_sweep({make_row({1.0, 1.0})}, {0.5}), estimation_error);
  CHECK_THROWS_AS(gamma_sweep(rows, {-0.5}), std::domain_error);
}

TEST_CASE("collapse sweep: theorem bounds along simplex trajectories") {
  const RowGenerator simplex = [](std::int64_t n) { return simplex_row({n, 2.0, 1.0}); };
  const auto table = collapse_sweep(simplex, {0.05, 20.0}, {1 << 16, 1 << 20});
  REQUIRE(table.size() == 4);
  for (const auto& pt : table) {
    CHECK(pt.beta == doctest::Approx(pt.s * pt.lambda).epsilon(1e-15));
    if (pt.s == 0.05) {
      CHECK(pt.top_two_gap <= (2.0 / 2.718281828459045) * 0.05 + 1e-10);
    } else {
      CHECK(pt.Z >= 1.0);
      CHECK(pt.Z <= 20.0 / 19.0 + 1e-10);
      CHECK(pt.entropy <= 0.35);
      CHECK(pt.entropy <=
            std::log(pt.Z) + (20.0 / 19.0) * (20.0 / 19.0) - 1.0 + 1e-9);
    }
  }

  // bounded contact count: spread plateaus near 1/2 at beta = sqrt(log n)
  for (std::int64_t n : {100000, 1000000, 4000000}) {
    const ScoreRow row = finite_contact_row(n);
    const double beta = std::sqrt(std::log(static_cast<double>(n)));
    const double spread = observables(softmax(row, beta)).spread;
    CHECK(spread > 0.5);
    CHECK(spread < 0.56);
  }

  CHECK_THROWS_AS(collapse_sweep(nullptr, {1.0}, {16}), input_error);
  const RowGenerator tied = [](std::int64_t n) {
    return make_row(std::vector<double>(static_cast<std::size_t>(n), 1.0));
  };
  CHECK_THROWS_AS(collapse_sweep(tied, {1.0}, {16}), estimation_error);
}

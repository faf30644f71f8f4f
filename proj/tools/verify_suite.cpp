#include "verify_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gapcount/estimators.hpp"
#include "gapcount/families.hpp"
#include "gapcount/row.hpp"
#include "gapcount/scales.hpp"

namespace gapcount::cli {

namespace {

constexpr std::uint64_t kSuiteSeed = 0x9ec0ffee;

double uniform(std::uint64_t stream, std::uint64_t k, double lo, double hi) {
  return lo + (hi - lo) * rng_unit(kSuiteSeed, stream, k);
}

// Mixed population: continuous rows, integer-lattice rows (duplicate gaps and
// exact ties), and occasionally an all-tied row.
ScoreRow random_row(std::uint64_t id, std::int64_t n_max_len = 512, bool allow_ties = true) {
  const auto n =
      static_cast<std::int64_t>(2 + rng_index(kSuiteSeed, id, 0, static_cast<std::size_t>(n_max_len - 1)));
  const int kind = static_cast<int>(rng_index(kSuiteSeed, id, 1, allow_ties ? 4 : 2));
  std::vector<double> scores(static_cast<std::size_t>(n));
  const double scale = uniform(id, 2, 0.5, 20.0);
  const double shift = uniform(id, 3, -50.0, 50.0);
  for (std::int64_t j = 0; j < n; ++j) {
    const double u = rng_unit(kSuiteSeed, id, 16 + static_cast<std::uint64_t>(j));
    double z = 0;
    switch (kind) {
      case 0: z = scale * (2.0 * u - 1.0); break;                             // uniform
      case 1: {                                                               // normal-ish
        const double v = rng_unit(kSuiteSeed, id, 5000 + static_cast<std::uint64_t>(j));
        z = scale * std::sqrt(-2.0 * std::log(u + 1e-300)) * std::cos(6.283185307179586 * v);
        break;
      }
      case 2: z = std::floor(16.0 * u) / 4.0; break;                          // lattice: ties
      default: z = 1.0; break;                                                // all tied
    }
    scores[static_cast<std::size_t>(j)] = z + shift;
  }
  return make_row(std::move(scores));
}

ScoreRow random_nontied_row(std::uint64_t id, std::int64_t n_max_len = 512) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    ScoreRow row = random_row(id + (attempt << 40), n_max_len, false);
    if (gap_profile(row).n_max == 1) return row;
  }
}

struct Suite {
  int failures = 0;
  void check(const std::string& name, const std::function<bool()>& body) {
    bool ok = false;
    std::string err;
    try {
      ok = body();
    } catch (const std::exception& e) {
      err = e.what();
    }
    if (ok) {
      std::printf("[ PASS ] %s\n", name.c_str());
    } else {
      ++failures;
      std::printf("[ FAIL ] %s%s%s\n", name.c_str(), err.empty() ? "" : ": ", err.c_str());
    }
  }
};

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

int run_verify_suite() {
  Suite suite;

  suite.check("softmax: sum=1, Z>=1, p*=1/Z, D<=G<=p*, 0<=H<=log n", [] {
    for (std::uint64_t i = 0; i < 400; ++i) {
      const ScoreRow row = random_row(1000 + i);
      for (double beta : {0.0, 0.3, 1.0, 7.0, 300.0}) {
        const SoftmaxResult sm = softmax(row, beta);
        double sum = 0;
        for (double p : sm.probs) sum += p;
        const Observables ob = observables(sm);
        const double log_n = std::log(static_cast<double>(row.scores.size()));
        if (std::abs(sum - 1.0) > 1e-12) return false;
        if (sm.Z < 1.0) return false;
        if (std::abs(ob.p_star - 1.0 / sm.Z) > 1e-12) return false;
        if (ob.spread > ob.p_star + 1e-15 || ob.top_two_gap > ob.spread + 1e-15) return false;
        if (ob.entropy < -1e-15 || ob.entropy > log_n + 1e-12) return false;
      }
    }
    return true;
  });

  suite.check("softmax: entropy non-increasing in beta", [] {
    for (std::uint64_t i = 0; i < 300; ++i) {
      const ScoreRow row = random_row(2000 + i);
      double prev = observables(softmax(row, 0.0)).entropy;
      for (double beta : {0.05, 0.2, 0.8, 2.0, 8.0, 64.0}) {
        const double h = observables(softmax(row, beta)).entropy;
        if (h > prev + 1e-10) return false;
        prev = h;
      }
    }
    return true;
  });

  suite.check("partition: by-parts integral equals direct Z (1e-10 rel)", [] {
    for (std::uint64_t i = 0; i < 2000; ++i) {
      const ScoreRow row = random_row(3000 + i);
      const GapProfile p = gap_profile(row);
      for (double beta : {1e-3, 0.7, 3.0, 40.0}) {
        if (!rel_close(partition_by_parts(p, beta), softmax(row, beta).Z, 1e-10)) return false;
      }
    }
    return true;
  });

  suite.check("ties: H >= log n_max at every beta", [] {
    for (std::uint64_t i = 0; i < 300; ++i) {
      const ScoreRow row = random_row(4000 + i);
      const GapProfile p = gap_profile(row);
      for (double beta : {0.0, 1.0, 30.0}) {
        if (observables(softmax(row, beta)).entropy <
            std::log(static_cast<double>(p.n_max)) - 1e-12)
          return false;
      }
    }
    return true;
  });

  suite.check("shift invariance: probs, H, D, G, Z unchanged under +c", [] {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const ScoreRow row = random_row(5000 + i);
      for (double c : {-7.25, 13.5, 900.0}) {
        ScoreRow shifted = row;
        for (double& z : shifted.scores) z += c;
        const SoftmaxResult a = softmax(row, 2.0);
        const SoftmaxResult b = softmax(shifted, 2.0);
        if (!rel_close(a.Z, b.Z, 1e-9)) return false;
        for (std::size_t j = 0; j < a.probs.size(); ++j)
          if (std::abs(a.probs[j] - b.probs[j]) > 1e-9) return false;
      }
    }
    return true;
  });

  suite.check("contact formula: lambda*delta = alpha*log n (1e-10 rel at eps=0)", [] {
    for (std::uint64_t i = 0; i < 2000; ++i) {
      const ScoreRow row = random_nontied_row(6000 + i);
      const ContactTriple t = contact_triple(row, 0.0);
      if (!rel_close(t.C, t.alpha * std::log(static_cast<double>(t.n)), 1e-10)) return false;
    }
    return true;
  });

  suite.check("envelope: N(u) <= e^{lambda u} at every gap; dense-grid sup matches", [] {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const ScoreRow row = random_nontied_row(7000 + i);
      const GapProfile p = gap_profile(row);
      const double lam = accumulation_scale(p).value;
      for (std::size_t g = 0; g < p.gaps.size(); ++g) {
        if (static_cast<double>(p.cum_counts[g]) >
            std::exp(lam * p.gaps[g]) * (1.0 + 1e-10))
          return false;
      }
      // grid = gaps plus uniform fill, evaluated through counting_function
      double sup = 0.0;
      const double top = p.gaps.back();
      for (double u : p.gaps)
        sup = std::max(sup, std::log(static_cast<double>(counting_function(p, u))) / u);
      for (int k = 1; k <= 10000; ++k) {
        const double t = top * static_cast<double>(k) / 10000.0;
        sup = std::max(sup, std::log(static_cast<double>(counting_function(p, t))) / t);
      }
      if (!rel_close(sup, lam, 1e-6)) return false;
    }
    return true;
  });

  suite.check("supercritical: Z(beta) <= beta/(beta-lambda) for beta > lambda", [] {
    for (std::uint64_t i = 0; i < 400; ++i) {
      const ScoreRow row = random_nontied_row(8000 + i);
      const double lam = accumulation_scale(gap_profile(row)).value;
      for (double s : {1.5, 2.0, 5.0, 30.0}) {
        const double beta = s * lam;
        if (softmax(row, beta).Z > beta / (beta - lam) + 1e-10) return false;
      }
    }
    return true;
  });

  suite.check("subcritical: D(s*lambda) <= (2/e) s for s <= 1/2", [] {
    for (std::uint64_t i = 0; i < 400; ++i) {
      const ScoreRow row = random_nontied_row(9000 + i);
      const double lam = accumulation_scale(gap_profile(row)).value;
      for (double s : {0.01, 0.1, 0.25, 0.5}) {
        const double d = observables(softmax(row, s * lam)).top_two_gap;
        if (d > (2.0 / 2.718281828459045) * s + 1e-10) return false;
      }
    }
    return true;
  });

  suite.check("resolved scale: monotone in r, equals lambda at r=0, rank-boundary sandwich", [] {
    for (std::uint64_t i = 0; i < 200; ++i) {
      const ScoreRow row = random_nontied_row(10000 + i);
      const GapProfile p = gap_profile(row);
      const double lam = accumulation_scale(p).value;
      if (resolved_scale(p, 0.0).value != lam) return false;
      double prev = lam;
      for (double r : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        const double v = resolved_scale(p, r).value;
        if (v > prev + 1e-12 || v > lam + 1e-12) return false;
        prev = v;
      }
      const double log_n = std::log(static_cast<double>(p.n));
      const double env = std::log1p(log_n);
      const double r = env + 0.5 * (log_n - env);  // inside (log(1+log n), log n)
      if (r > env && r < log_n) {
        const double b = rank_boundary(p, r).value;
        if (resolved_scale(p, r).value > b + 1e-9) return false;
        if (b > resolved_scale(p, r - env).value + 1e-9) return false;
      }
    }
    return true;
  });

  suite.check("resolved accumulation implies rank-gap collapse: log Z > r below lambda^(r)", [] {
    for (std::uint64_t i = 0; i < 300; ++i) {
      const ScoreRow row = random_nontied_row(11000 + i, 512);
      const GapProfile p = gap_profile(row);
      if (p.n < 200) continue;
      const double r = 5.0;
      const double lr = resolved_scale(p, r).value;
      if (lr <= 0.0) continue;
      const double beta = 0.995 * lr;
      if (profile_log_z(p, beta) <= r - 1e-9) return false;
    }
    return true;
  });

  suite.check("laplace sandwich: S <= log Z <= S + log(1+log n)", [] {
    for (std::uint64_t i = 0; i < 400; ++i) {
      const ScoreRow row = random_row(12000 + i);
      const GapProfile p = gap_profile(row);
      const double env = std::log1p(std::log(static_cast<double>(p.n)));
      for (std::uint64_t k = 0; k < 6; ++k) {
        const double beta = std::pow(10.0, uniform(12000 + i, 100 + k, -3.0, 3.0));
        const double s = laplace_envelope(p, beta);
        const double lz = softmax(row, beta).log_z;
        if (s > lz + 1e-12 || lz > s + env + 1e-12) return false;
      }
    }
    return true;
  });

  suite.check("planted exponents: simplex xi in {0.5,1,1.5,2}; block (1.5,-1,-1.5); residual 0", [] {
    const std::vector<std::int64_t> grid = {1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18, 1 << 20};
    Cell cell{"verify", grid, {MetaField::layer, MetaField::head}};
    for (double xi : {0.5, 1.0, 1.5, 2.0}) {
      std::vector<TripleRecord> recs;
      for (std::int64_t n : grid) {
        SimplexConfig cfg;
        cfg.n = n;
        cfg.delta = std::pow(std::log(static_cast<double>(n)), 1.0 - xi);
        cfg.r_sq = std::max(cfg.delta, 1.0);
        ScoreRow row = simplex_row(cfg);
        row.meta.n = n;
        recs.push_back({row.meta, contact_triple(row)});
      }
      const BucketSeries series = bucket_series(cell, recs);
      if (std::abs(ols_loglog(series, Coord::lambda).slope - xi) > 1e-10) return false;
    }
    std::vector<TripleRecord> recs;
    for (std::int64_t n : grid) {
      BlockConfig cfg;
      cfg.n = n;
      cfg.m = 2;
      const double log_n = std::log(static_cast<double>(n));
      cfg.delta = std::log(2.0) * std::pow(log_n, -1.5);
      cfg.tau = 2.0 * std::pow(log_n, -0.5);
      cfg.r_sq = 1.0;
      ScoreRow row = block_row(cfg);
      row.meta.n = n;
      recs.push_back({row.meta, contact_triple(row)});
    }
    const BucketSeries series = bucket_series(cell, recs);
    const ExponentFit fl = ols_loglog(series, Coord::lambda);
    const ExponentFit fa = ols_loglog(series, Coord::alpha);
    const ExponentFit fd = ols_loglog(series, Coord::delta);
    return std::abs(fl.slope - 1.5) <= 1e-10 && std::abs(fa.slope + 1.0) <= 1e-10 &&
           std::abs(fd.slope + 1.5) <= 1e-10 &&
           std::abs(decomposition_residual(fl, fa, fd)) <= 1e-10;
  });

  suite.check("bootstrap: bit-identical across repeats and worker counts", [] {
    const std::vector<std::int64_t> grid = {64, 256, 1024};
    Cell cell{"verify", grid, {MetaField::layer, MetaField::head}};
    std::vector<TripleRecord> recs;
    for (std::int64_t n : grid) {
      for (int h = 0; h < 6; ++h) {
        SimplexConfig cfg;
        cfg.n = n;
        cfg.delta = 1.0 + 0.1 * h;
        cfg.r_sq = 2.0 + 0.1 * h;
        ScoreRow row = simplex_row(cfg);
        row.meta.head = h;
        recs.push_back({row.meta, contact_triple(row)});
      }
    }
    const CoordBootstrap a = bootstrap_all(cell, recs, 200, 42, Weighting::plain, 5.0, 1);
    const CoordBootstrap b = bootstrap_all(cell, recs, 200, 42, Weighting::plain, 5.0, 4);
    const CoordBootstrap c = bootstrap_all(cell, recs, 200, 42, Weighting::plain, 5.0, 1);
    return a.lambda.half_iqr == b.lambda.half_iqr && a.lambda.half_iqr == c.lambda.half_iqr &&
           a.alpha.half_iqr == b.alpha.half_iqr && a.delta.half_iqr == b.delta.half_iqr &&
           a.lambda.point_estimate == b.lambda.point_estimate;
  });

  suite.check("gamma sweep: median p* monotone; limits at small/large gamma", [] {
    std::vector<ScoreRow> rows;
    for (std::uint64_t i = 0; i < 200; ++i) {
      SimplexConfig cfg;
      cfg.n = 1 << (10 + rng_index(kSuiteSeed, 13000 + i, 0, 8));
      cfg.delta = std::pow(10.0, uniform(13000 + i, 1, -1.0, 1.0));
      cfg.r_sq = std::max(1.0, cfg.delta);
      rows.push_back(simplex_row(cfg));
    }
    const auto table = gamma_sweep(rows, default_gamma_grid());
    for (std::size_t g = 1; g < table.size(); ++g)
      if (table[g].median_p_star <= table[g - 1].median_p_star) return false;
    return table.front().frac_below_inv_log_n == 1.0 && table.back().frac_below_inv_log_n == 0.0;
  });

  suite.check("gram realization: B^T B reconstructs PSD matrices to 1e-8", [] {
    for (std::uint64_t i = 0; i < 40; ++i) {
      const auto n = static_cast<Eigen::Index>(2 + rng_index(kSuiteSeed, 14000 + i, 0, 63));
      const auto k = static_cast<Eigen::Index>(1 + rng_index(kSuiteSeed, 14000 + i, 1, static_cast<std::size_t>(n)));
      Eigen::MatrixXd g(k, n);
      for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
          g(r, c) = uniform(14000 + i, 16 + static_cast<std::uint64_t>(r * n + c), -1.0, 1.0);
      const Eigen::MatrixXd sigma = g.transpose() * g;
      const Eigen::MatrixXd factor = gram_realize(sigma, static_cast<int>(n));
      if (((factor.transpose() * factor) - sigma).cwiseAbs().maxCoeff() > 1e-8) return false;
    }
    return true;
  });

  suite.check("block family: closed-form lambda equals measured (1e-12)", [] {
    for (std::uint64_t i = 0; i < 200; ++i) {
      BlockConfig cfg;
      const std::int64_t blocks = 2 + static_cast<std::int64_t>(rng_index(kSuiteSeed, 15000 + i, 0, 14));
      cfg.m = 2 + static_cast<std::int64_t>(rng_index(kSuiteSeed, 15000 + i, 1, 30));
      cfg.n = cfg.m * blocks;
      cfg.delta = uniform(15000 + i, 2, 0.05, 2.0);
      cfg.tau = cfg.delta + uniform(15000 + i, 3, 0.05, 4.0);
      cfg.r_sq = cfg.tau + 1.0;
      const double closed = block_lambda_closed_form(cfg);
      const double measured = accumulation_scale(gap_profile(block_row(cfg))).value;
      if (!rel_close(closed, measured, 1e-12)) return false;
    }
    return true;
  });

  std::printf("%s: %d invariant(s) failed\n", suite.failures == 0 ? "OK" : "FAILED",
              suite.failures);
  return suite.failures;
}

}  // namespace gapcount::cli

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gapcount/families.hpp"
#include "gapcount/scales.hpp"
#include "test_util.hpp"

using namespace gapcount;

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

Eigen::MatrixXd simplex_gram(std::int64_t n, double r_sq, double delta) {
  const auto sz = static_cast<Eigen::Index>(n);
  return (r_sq - delta) * Eigen::MatrixXd::Ones(sz, sz) +
         delta * Eigen::MatrixXd::Identity(sz, sz);
}

Eigen::MatrixXd block_gram(const BlockConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto m = static_cast<Eigen::Index>(cfg.m);
  Eigen::MatrixXd membership = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index b = 0; b < n / m; ++b)
    membership.block(b * m, b * m, m, m) = Eigen::MatrixXd::Ones(m, m);
  return cfg.delta * Eigen::MatrixXd::Identity(n, n) + (cfg.tau - cfg.delta) * membership +
         (cfg.r_sq - cfg.tau) * Eigen::MatrixXd::Ones(n, n);
}

}  // namespace

TEST_CASE("simplex rows: scores and measured lambda") {
  const ScoreRow row = simplex_row({4, 2.0, 1.0});
  CHECK(row.scores == std::vector<double>{2.0, 1.0, 1.0, 1.0});
  CHECK(rel_close(accumulation_scale(gap_profile(row)).value, std::log(4.0), 1e-15));

  CHECK(rel_close(accumulation_scale(gap_profile(simplex_row({2, 1.0, 1.0}))).value,
                  std::log(2.0), 1e-15));

  // planted exponent 2 at n = 2^16: delta = (log n)^{-1} gives lambda = (log n)^2
  const std::int64_t n = 1 << 16;
  const double delta = 1.0 / std::log(static_cast<double>(n));
  const ScoreRow planted = simplex_row({n, 1.0, delta});
  CHECK(rel_close(accumulation_scale(gap_profile(planted)).value, 122.99597156305956, 1e-12));

  CHECK_THROWS_AS(simplex_row({1, 1.0, 0.5}), input_error);
  CHECK_THROWS_AS(simplex_row({4, 1.0, 0.0}), input_error);
  CHECK_THROWS_AS(simplex_row({4, 0.5, 1.0}), input_error);  // r_sq < delta
}

TEST_CASE("block rows: dominance regimes and the closed form") {
  const BlockConfig within{12, 3, 0.5, 3.0, 4.0};
  const ContactTriple wt = contact_triple(block_row(within));
  CHECK(rel_close(wt.lambda, 2.1972245773362194, 1e-14));
  CHECK(wt.delta == 0.5);
  CHECK(rel_close(wt.alpha, 0.44211410869774031, 1e-14));
  CHECK(rel_close(block_lambda_closed_form(within), wt.lambda, 1e-12));

  // across-block dominance degenerates to the simplex endpoint
  const BlockConfig across{12, 3, 2.9, 3.0, 4.0};
  const ContactTriple at = contact_triple(block_row(across));
  CHECK(rel_close(at.lambda, std::log(12.0) / 3.0, 1e-13));
  CHECK(at.delta == 3.0);
  CHECK(at.alpha == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rel_close(block_lambda_closed_form(across), at.lambda, 1e-12));

  // m = n: identical scores to a simplex with gap delta... plus the tau tier is empty
  const ScoreRow full = block_row({6, 6, 0.8, 1.0, 2.0});
  const ScoreRow simple = simplex_row({6, 2.0, 0.8});
  CHECK(full.scores == simple.scores);

  CHECK_THROWS_AS(block_row({12, 5, 0.5, 3.0, 4.0}), input_error);  // m does not divide n
  CHECK_THROWS_AS(block_row({12, 1, 0.5, 3.0, 4.0}), input_error);
  CHECK_THROWS_AS(block_row({12, 3, 3.0, 0.5, 4.0}), input_error);  // delta >= tau
  CHECK_THROWS_AS(block_row({12, 3, 0.5, 5.0, 4.0}), input_error);  // tau > r_sq
}

TEST_CASE("simplex contact triple matches the closed form exactly") {
  constexpr std::uint64_t seed = 888;
  for (std::uint64_t i = 0; i < 300; ++i) {
    SimplexConfig cfg;
    cfg.n = 2 + static_cast<std::int64_t>(rng_index(seed, i, 0, 2000));
    cfg.delta = std::pow(10.0, testutil::uniform(seed, i, 1, -2.0, 1.0));
    cfg.r_sq = cfg.delta + testutil::uniform(seed, i, 2, 0.0, 3.0);
    const ContactTriple t = contact_triple(simplex_row(cfg));
    CHECK(rel_close(t.lambda, std::log(static_cast<double>(cfg.n)) / cfg.delta, 1e-12));
    CHECK(rel_close(t.delta, cfg.delta, 1e-12));  // one fp subtraction away from exact
    CHECK(rel_close(t.alpha, 1.0, 1e-12));
  }
}

TEST_CASE("block closed form equals measured lambda on random configs") {
  constexpr std::uint64_t seed = 909;
  for (std::uint64_t i = 0; i < 300; ++i) {
    BlockConfig cfg;
    cfg.m = 2 + static_cast<std::int64_t>(rng_index(seed, i, 0, 40));
    cfg.n = cfg.m * (2 + static_cast<std::int64_t>(rng_index(seed, i, 1, 20)));
    cfg.delta = testutil::uniform(seed, i, 2, 0.02, 3.0);
    cfg.tau = cfg.delta + testutil::uniform(seed, i, 3, 0.02, 5.0);
    cfg.r_sq = cfg.tau + testutil::uniform(seed, i, 4, 0.0, 2.0);
    CHECK(rel_close(block_lambda_closed_form(cfg),
                    accumulation_scale(gap_profile(block_row(cfg))).value, 1e-12));
  }
}

TEST_CASE("finite-contact family: frozen observables at n = 1e6") {
  const std::int64_t n = 1000000;
  const ScoreRow row = finite_contact_row(n);
  const double log_n = std::log(static_cast<double>(n));
  const double beta = std::sqrt(log_n);

  // closed-form oracle: Z = 1 + e^{-beta log2/log n} + (n-2) e^{-beta log n}
  const double z_oracle =
      1.0 + std::exp(-beta * std::log(2.0) / log_n) +
      static_cast<double>(n - 2) * std::exp(-beta * log_n);
  CHECK(rel_close(z_oracle, 1.8298716917464294, 1e-13));

  const SoftmaxResult sm = softmax(row, beta);
  CHECK(rel_close(sm.Z, z_oracle, 1e-12));
  CHECK(rel_close(sm.probs[0], 0.54648640366997540, 1e-12));
  CHECK(rel_close(sm.probs[0], sm.probs[1] * std::exp(beta * std::log(2.0) / log_n), 1e-11));
  const Observables ob = observables(sm);
  CHECK(rel_close(ob.spread, 0.54648640366997540, 1e-11));

  // resolved scale at half resolution reads exactly 1/2
  CHECK(rel_close(resolved_scale(gap_profile(row), log_n / 2.0).value, 0.5, 1e-13));

  CHECK_THROWS_AS(finite_contact_row(2), input_error);
}

TEST_CASE("gram realization: identity, simplex, block") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd b = gram_realize(eye, 3);
  CHECK(((b.transpose() * b) - eye).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::MatrixXd simp = simplex_gram(4, 2.0, 1.0);
  const Eigen::MatrixXd bs = gram_realize(simp, 4);
  const Eigen::MatrixXd scores = bs.transpose() * bs;  // Q^T K / sqrt(d) with Q=K=d^{1/4} B
  CHECK((scores - simp).cwiseAbs().maxCoeff() <= 1e-8);
  const ScoreRow expect = simplex_row({4, 2.0, 1.0});
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(scores(0, j) - expect.scores[static_cast<std::size_t>(j)]) <= 1e-8);

  const BlockConfig cfg{12, 3, 0.5, 3.0, 4.0};
  const Eigen::MatrixXd blk = block_gram(cfg);
  const Eigen::MatrixXd bb = gram_realize(blk, 12);
  const Eigen::MatrixXd bscores = bb.transpose() * bb;
  CHECK((bscores - blk).cwiseAbs().maxCoeff() <= 1e-8);
  const ScoreRow bexpect = block_row(cfg);
  for (int j = 0; j < 12; ++j)
    CHECK(std::abs(bscores(0, j) - bexpect.scores[static_cast<std::size_t>(j)]) <= 1e-8);
}

TEST_CASE("gram realization: rank, symmetry and PSD gates") {
  // rank 3 but d_qk = 2
  CHECK_THROWS_AS(gram_realize(Eigen::MatrixXd::Identity(3, 3), 2), input_error);

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;  // asymmetric beyond 1e-10
  CHECK_THROWS_AS(gram_realize(asym, 3), input_error);

  Eigen::MatrixXd indef = Eigen::MatrixXd::Identity(2, 2);
  indef(0, 0) = -1.0;
  CHECK_THROWS_AS(gram_realize(indef, 2), input_error);

  // tiny negative eigenvalue dust is clamped, not rejected
  Eigen::MatrixXd dusty = Eigen::MatrixXd::Identity(2, 2);
  dusty(1, 1) = -1e-12;
  const Eigen::MatrixXd d = gram_realize(dusty, 2);
  CHECK(((d.transpose() * d) - dusty).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gram realization: random PSD reconstruction sweep") {
  constexpr std::uint64_t seed = 1010;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto n = static_cast<Eigen::Index>(2 + rng_index(seed, i, 0, 63));
    const auto k = static_cast<Eigen::Index>(1 + rng_index(seed, i, 1, static_cast<std::size_t>(n)));
    Eigen::MatrixXd g(k, n);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        g(r, c) = testutil::uniform(seed, i, 16 + static_cast<std::uint64_t>(r * n + c), -2.0, 2.0);
    const Eigen::MatrixXd sigma = g.transpose() * g;
    const Eigen::MatrixXd factor = gram_realize(sigma, static_cast<int>(n));
    CHECK(((factor.transpose() * factor) - sigma).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("temperature schedules: closed-form points") {
  // legacy multiplier
  CHECK(legacy_multiplier(8192, 8192, 2.0) == 1.0);
  CHECK(legacy_multiplier(100, 8192, 3.0) == 1.0);  // inside the training window
  CHECK(std::abs(legacy_multiplier(65536, 256, 2.0) - 4.0) <= 1e-12);
  CHECK(legacy_multiplier(1 << 20, 8192, 0.0) == 1.0);

  // yarn
  CHECK(yarn_beta(8192, 8192) == 1.0);
  CHECK(yarn_beta(100, 8192) == 1.0);
  CHECK(rel_close(yarn_beta(44052, 2), 3.9999915410944278, 1e-13));   // ratio ~ e^10 -> ~4
  CHECK(rel_close(yarn_beta(5437, 2000), 1.2100176567372573, 1e-13)); // ratio ~ e -> ~1.21
  const double ratio = 44052.0 / 2.0;
  const double closed = (1.0 + 0.1 * std::log(ratio)) * (1.0 + 0.1 * std::log(ratio));
  CHECK(rel_close(yarn_beta(44052, 2), closed, 1e-15));

  // dynamic-NTK base rescale
  CHECK(dynamic_ntk_scale(4096, 8192, 128) == 1.0);
  CHECK(rel_close(dynamic_ntk_scale(16384, 8192, 128), 2.0221261689737912, 1e-13));
  CHECK(rel_close(dynamic_ntk_scale(32768, 8192, 4), 16.0, 1e-13));

  CHECK_THROWS_AS(legacy_multiplier(8192, 1, 1.0), input_error);
  CHECK_THROWS_AS(dynamic_ntk_scale(8192, 8192, 3), input_error);
  CHECK_THROWS_AS(dynamic_ntk_scale(8192, 8192, 2), input_error);
}

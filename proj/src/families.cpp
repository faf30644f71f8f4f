#include "gapcount/families.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace gapcount {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw input_error(what);
}

}  // namespace

ScoreRow simplex_row(const SimplexConfig& cfg) {
  require(cfg.n >= 2, "simplex config: n must be >= 2");
  require(std::isfinite(cfg.delta) && cfg.delta > 0.0, "simplex config: delta must be > 0");
  require(std::isfinite(cfg.r_sq) && cfg.r_sq >= cfg.delta,
          "simplex config: r_sq >= delta required for a positive Gram");
  std::vector<double> scores(static_cast<std::size_t>(cfg.n), cfg.r_sq - cfg.delta);
  scores[0] = cfg.r_sq;
  return make_row(std::move(scores));
}

ScoreRow block_row(const BlockConfig& cfg) {
  require(cfg.n >= 2, "block config: n must be >= 2");
  require(cfg.m >= 2 && cfg.m <= cfg.n, "block config: block size m must satisfy 2 <= m <= n");
  require(cfg.n % cfg.m == 0, "block config: m must divide n");
  require(std::isfinite(cfg.delta) && std::isfinite(cfg.tau) && cfg.delta > 0.0 &&
              cfg.delta < cfg.tau,
          "block config: 0 < delta < tau required");
  require(std::isfinite(cfg.r_sq) && cfg.tau <= cfg.r_sq, "block config: tau <= r_sq required");
  std::vector<double> scores(static_cast<std::size_t>(cfg.n), cfg.r_sq - cfg.tau);
  scores[0] = cfg.r_sq;
  for (std::int64_t j = 1; j < cfg.m; ++j) scores[static_cast<std::size_t>(j)] = cfg.r_sq - cfg.delta;
  return make_row(std::move(scores));
}

double block_lambda_closed_form(const BlockConfig& cfg) {
  block_row(cfg);  // validate
  return std::max(std::log(static_cast<double>(cfg.m)) / cfg.delta,
                  std::log(static_cast<double>(cfg.n)) / cfg.tau);
}

ScoreRow finite_contact_row(std::int64_t n) {
  require(n >= 3, "finite-contact family requires n >= 3");
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> scores(static_cast<std::size_t>(n), -log_n);
  scores[0] = 0.0;
  scores[1] = -std::log(2.0) / log_n;
  return make_row(std::move(scores));
}

Eigen::MatrixXd gram_realize(const Eigen::MatrixXd& sigma, int d_qk) {
  require(sigma.rows() == sigma.cols() && sigma.rows() >= 1, "gram_realize: sigma must be square");
  require(d_qk >= 1, "gram_realize: d_qk must be >= 1");
  const auto n = sigma.rows();

  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw input_error("gram_realize: matrix asymmetry " + std::to_string(asym) +
                      " exceeds tolerance");

  const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw estimation_error("gram_realize: eigendecomposition failed");
  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const double spectral = std::max(std::abs(evals(0)), std::abs(evals(n - 1)));

  if (spectral > 0.0 && evals(0) < -1e-8 * spectral)
    throw input_error("gram_realize: matrix is not positive semidefinite at tolerance 1e-8");

  // numerical rank at 1e-8 relative; negative dust is clamped to zero
  const double rank_tol = 1e-8 * spectral;
  int rank = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (evals(i) > rank_tol) ++rank;
  if (rank > d_qk)
    throw input_error("gram_realize: numerical rank " + std::to_string(rank) + " exceeds d_qk=" +
                      std::to_string(d_qk));

  Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(d_qk, n);
  int out = 0;
  for (Eigen::Index i = n - 1; i >= 0 && out < rank; --i) {  // largest eigenvalues first
    if (evals(i) > rank_tol)
      factor.row(out++) = std::sqrt(evals(i)) * es.eigenvectors().col(i).transpose();
  }
  return factor;
}

double legacy_multiplier(std::int64_t n, std::int64_t n_train, double xi) {
  require(n >= 1 && n_train >= 2, "legacy multiplier: n >= 1 and n_train >= 2 required");
  require(std::isfinite(xi), "legacy multiplier: xi must be finite");
  const double ratio =
      std::max(1.0, std::log(static_cast<double>(n)) / std::log(static_cast<double>(n_train)));
  return std::pow(ratio, xi);
}

double yarn_beta(std::int64_t n, std::int64_t n_train) {
  require(n >= 1 && n_train >= 2, "yarn schedule: n >= 1 and n_train >= 2 required");
  const double s = std::max(1.0, static_cast<double>(n) / static_cast<double>(n_train));
  const double m = 1.0 + 0.1 * std::log(s);
  return m * m;
}

double dynamic_ntk_scale(std::int64_t n_eval, std::int64_t n_train, int d) {
  require(n_eval >= 1 && n_train >= 2, "dynamic-ntk: n_eval >= 1 and n_train >= 2 required");
  require(d >= 4 && d % 2 == 0, "dynamic-ntk: head dimension d must be even and >= 4");
  const double rho = std::max(1.0, static_cast<double>(n_eval) / static_cast<double>(n_train));
  return std::pow(rho, static_cast<double>(d) / (static_cast<double>(d) - 2.0));
}

}  // namespace gapcount

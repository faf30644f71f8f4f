#pragma once

// Deterministic score families with closed-form ground truth, the Gram-matrix
// realization of score rows as Q = K attention, and the scalar temperature
// schedules from prior context-extension methods.

#include <Eigen/Dense>
#include <cstdint>

#include "gapcount/row.hpp"

namespace gapcount {

/// Equicorrelated configuration: one winner at r^2, n-1 competitors at
/// r^2 - delta. Gram (r^2 - delta) J + delta I; ground truth
/// Lambda = log n / delta, alpha = 1, contact gap delta.
struct SimplexConfig {
  std::int64_t n = 0;
  double r_sq = 0.0;
  double delta = 0.0;  // flat competitor gap, requires 0 < delta <= r_sq
};

/// Two-level block-constant configuration: winner at r^2, m-1 within-block
/// competitors at gap delta, n-m across-block at gap tau. N_n steps
/// 1 -> m at delta and m -> n at tau.
struct BlockConfig {
  std::int64_t n = 0;
  std::int64_t m = 0;  // block size, 2 <= m <= n, m | n
  double delta = 0.0;
  double tau = 0.0;  // requires 0 < delta < tau <= r_sq
  double r_sq = 0.0;
};

ScoreRow simplex_row(const SimplexConfig& cfg);
ScoreRow block_row(const BlockConfig& cfg);

/// max(log m / delta, log n / tau); equals accumulation_scale(block_row(cfg))
/// to 1e-12. The smaller-gap jump dominates when log m/delta > log n/tau.
double block_lambda_closed_form(const BlockConfig& cfg);

/// Bounded-contact-count family (n >= 3): scores (0, -log2/log n, -log n, ...).
/// Ground truth Lambda = log n, delta = alpha = log2/log n, C = log 2.
ScoreRow finite_contact_row(std::int64_t n);

/// Factors a symmetric PSD score matrix: returns B (d_qk x n) with
/// B^T B = sigma, so Q = K = d_qk^{1/4} B gives Q^T K / sqrt(d_qk) = sigma.
/// Realized via symmetric eigendecomposition; eigenvalues below 0 are clamped
/// and rows are zero-padded to d_qk. PSD tolerance 1e-8 (relative to the
/// spectral norm), symmetry tolerance 1e-10; numerical rank above d_qk or
/// asymmetric input -> input_error.
Eigen::MatrixXd gram_realize(const Eigen::MatrixXd& sigma, int d_qk);

// --- scalar temperature schedules -----------------------------------------

/// (max(1, log n / log n_train))^xi; 1 for n <= n_train and at xi = 0.
double legacy_multiplier(std::int64_t n, std::int64_t n_train, double xi);

/// (1 + 0.1 ln(max(1, n/n_train)))^2 — the squared query+key rotary multiplier.
double yarn_beta(std::int64_t n, std::int64_t n_train);

/// rho^{d/(d-2)} with rho = max(1, n_eval/n_train); the per-evaluation rotary
/// base rescale factor. Requires even d >= 4.
double dynamic_ntk_scale(std::int64_t n_eval, std::int64_t n_train, int d);

}  // namespace gapcount

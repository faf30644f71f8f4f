#pragma once

// Shared plumbing: error types, deterministic counter-based RNG, quantiles,
// a static-partition parallel_for, and float formatting for the wire formats.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapcount {

inline constexpr const char* kToolVersion = "0.1.0";

// Default numerical tolerances of the analysis protocol.
inline constexpr double kContactEps = 1e-6;        // contact-gap slack, relative to Lambda
inline constexpr double kGapMergeRel = 1e-12;      // distinct-gap merge tolerance, scaled by max(1,|z*|)
inline constexpr double kTieLog10Threshold = 5.0;  // aggregation drops rows with log10(Lambda) above this
inline constexpr std::int64_t kDefaultBootstrapB = 200;

/// Bad input data or configuration. CLI maps this to exit code 1.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Not enough (or unusable) data to estimate. CLI maps this to exit code 2.
struct estimation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Counter-based RNG: the SplitMix64 finalizer addressed by (seed, stream, k).
// Stateless, so any draw can be evaluated on any worker in any order with
// bit-identical results.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t rng_u64(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  return mix64(mix64(seed + kGolden * (stream + 1)) + kGolden * (k + 1));
}

/// Uniform double in [0, 1).
inline double rng_unit(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  return static_cast<double>(rng_u64(seed, stream, k) >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, m). Modulo bias is < m/2^64 and deterministic.
inline std::size_t rng_index(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                             std::size_t m) {
  return static_cast<std::size_t>(rng_u64(seed, stream, k) % m);
}

// ---------------------------------------------------------------------------
// Quantiles (linear interpolation, "type 7") over an ascending vector.
// ---------------------------------------------------------------------------

inline double quantile_sorted(const std::vector<double>& x, double p) {
  if (x.empty()) throw estimation_error("quantile of empty sample");
  if (x.size() == 1) return x[0];
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= x.size()) return x.back();
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

inline double half_iqr_sorted(const std::vector<double>& x) {
  return 0.5 * (quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25));
}

// ---------------------------------------------------------------------------
// Static block partition over [0, total). Worker exceptions are rethrown on
// the caller thread (first worker index wins), so failures are deterministic.
// ---------------------------------------------------------------------------

void parallel_for(std::size_t total, int threads, const std::function<void(std::size_t)>& body);

/// Threads requested on the command line: 0 means "all cores".
int resolve_threads(int requested);

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// %.17g — round-trip exact for binary64. inf/nan normalize to "inf"/"-inf"/"nan".
inline std::string format_g17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace gapcount

#pragma once

// Analysis report: per-cell exponent estimates with their intervals, the
// bucket table behind them, and a provenance block sufficient to reproduce
// every number (seed, B, tolerances, input digest, tool version).

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapcount/estimators.hpp"

namespace gapcount {

struct FitReport {
  ExponentFit fit;
  BootstrapResult bootstrap;
};

struct CellReport {
  std::string id;
  std::vector<std::int64_t> n_grid;
  std::int64_t rows = 0;      // all rows of the cell on the grid
  std::int64_t excluded = 0;  // ties + degenerate + above-threshold
  double tie_pct = 0.0;
  BucketSeries buckets;
  FitReport xi_lambda, xi_alpha, xi_delta;
  double decomposition_residual = 0.0;
  std::vector<std::string> warnings;
};

struct Provenance {
  std::string input_path;
  std::string input_digest;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::int64_t bootstrap_B = kDefaultBootstrapB;
  double tie_log10_threshold = kTieLog10Threshold;
  std::string weighting = "plain";
  std::vector<std::string> tuple_key;
  std::vector<std::int64_t> n_grid;  // empty: per-cell grids from the data
};

struct AnalysisReport {
  Provenance provenance;
  std::vector<CellReport> cells;
  // optional sweep tables; serialized only when non-empty
  std::vector<GammaPoint> gamma_sweep;
  std::vector<CollapsePoint> collapse_sweep;
};

nlohmann::ordered_json to_json(const AnalysisReport& report);
void write_report(const std::string& path, const AnalysisReport& report);

}  // namespace gapcount

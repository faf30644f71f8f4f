#include "gapcount/report.hpp"

#include <fstream>

namespace gapcount {

namespace {

using nlohmann::ordered_json;

ordered_json fit_json(const FitReport& f) {
  ordered_json j;
  j["estimate"] = f.fit.slope;
  j["intercept"] = f.fit.intercept;
  j["stderr"] = f.fit.stderr_slope;
  j["n_points"] = f.fit.n_points;
  j["half_iqr"] = f.bootstrap.half_iqr;
  j["bootstrap_B"] = f.bootstrap.B;
  j["seed"] = f.bootstrap.seed;
  return j;
}

ordered_json bucket_json(const BucketPoint& p) {
  ordered_json j;
  j["n"] = p.n;
  j["count"] = p.count;
  j["tie_count"] = p.tie_count;
  if (p.valid()) {
    j["mean_log_lambda"] = p.mean_log_lambda;
    j["mean_log_alpha"] = p.mean_log_alpha;
    j["mean_log_delta"] = p.mean_log_delta;
  }
  return j;
}

}  // namespace

ordered_json to_json(const AnalysisReport& report) {
  ordered_json j;
  j["tool"] = "gapcount";
  j["version"] = report.provenance.tool_version;

  ordered_json prov;
  prov["input"] = report.provenance.input_path;
  prov["input_digest"] = report.provenance.input_digest;
  prov["seed"] = report.provenance.seed;
  prov["bootstrap_B"] = report.provenance.bootstrap_B;
  prov["tie_log10_threshold"] = report.provenance.tie_log10_threshold;
  prov["weighting"] = report.provenance.weighting;
  prov["tuple_key"] = report.provenance.tuple_key;
  if (!report.provenance.n_grid.empty()) prov["n_grid"] = report.provenance.n_grid;
  j["provenance"] = std::move(prov);

  ordered_json cells = ordered_json::array();
  for (const auto& c : report.cells) {
    ordered_json cj;
    cj["id"] = c.id;
    cj["n_grid"] = c.n_grid;
    cj["rows"] = c.rows;
    cj["excluded_rows"] = c.excluded;
    cj["tie_pct"] = c.tie_pct;
    ordered_json buckets = ordered_json::array();
    for (const auto& p : c.buckets.points) buckets.push_back(bucket_json(p));
    cj["buckets"] = std::move(buckets);
    cj["xi_lambda"] = fit_json(c.xi_lambda);
    cj["xi_alpha"] = fit_json(c.xi_alpha);
    cj["xi_delta"] = fit_json(c.xi_delta);
    cj["decomposition_residual"] = c.decomposition_residual;
    cj["warnings"] = c.warnings;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);

  if (!report.gamma_sweep.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& p : report.gamma_sweep) {
      ordered_json r;
      r["gamma"] = p.gamma;
      r["median_p_star"] = p.median_p_star;
      r["frac_p_star_le_inv_log_n"] = p.frac_below_inv_log_n;
      r["rows_used"] = p.rows_used;
      rows.push_back(std::move(r));
    }
    j["gamma_sweep"] = std::move(rows);
  }
  if (!report.collapse_sweep.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& p : report.collapse_sweep) {
      ordered_json r;
      r["s"] = p.s;
      r["n"] = p.n;
      r["lambda"] = p.lambda;
      r["beta"] = p.beta;
      r["H"] = p.entropy;
      r["D"] = p.top_two_gap;
      r["G"] = p.spread;
      r["Z"] = p.Z;
      rows.push_back(std::move(r));
    }
    j["collapse_sweep"] = std::move(rows);
  }
  return j;
}

void write_report(const std::string& path, const AnalysisReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open report for writing: " + path);
  out << to_json(report).dump(2) << '\n';
  if (!out) throw input_error("write failed: " + path);
}

}  // namespace gapcount

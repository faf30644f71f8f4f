// gapcount: reads attention-score dumps, computes per-row gap-counting
// diagnostics (accumulation scale, contact point), aggregates them into
// exponent estimates with bootstrap intervals, and synthesizes closed-form
// score families for end-to-end checks.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "family_spec.hpp"
#include "gapcount/dump_io.hpp"
#include "gapcount/estimators.hpp"
#include "gapcount/families.hpp"
#include "gapcount/report.hpp"
#include "gapcount/scales.hpp"
#include "verify_suite.hpp"

namespace gc = gapcount;

namespace {

std::vector<std::int64_t> parse_int_list(const std::string& s, const char* what) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    if (!tok.empty()) {
      char* end = nullptr;
      const long long v = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0')
        throw gc::input_error(std::string("bad ") + what + " entry '" + tok + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw gc::input_error(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    if (!tok.empty()) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw gc::input_error(std::string("bad ") + what + " entry '" + tok + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw gc::input_error(std::string("empty ") + what + " list");
  return out;
}

std::vector<gc::MetaField> parse_tuple_key(const std::string& s) {
  std::vector<gc::MetaField> key;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string tok = s.substr(pos, comma - pos);
    if (tok == "layer") key.push_back(gc::MetaField::layer);
    else if (tok == "head") key.push_back(gc::MetaField::head);
    else if (tok == "seq") key.push_back(gc::MetaField::seq);
    else if (tok == "qpos") key.push_back(gc::MetaField::query_pos);
    else if (!tok.empty())
      throw gc::input_error("bad tuple-key field '" + tok + "' (layer|head|seq|qpos)");
    pos = comma + 1;
  }
  if (key.empty()) throw gc::input_error("empty tuple key");
  return key;
}

std::string tuple_key_name(gc::MetaField f) {
  switch (f) {
    case gc::MetaField::layer: return "layer";
    case gc::MetaField::head: return "head";
    case gc::MetaField::seq: return "seq";
    case gc::MetaField::query_pos: return "qpos";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOpts {
  std::string in, out;
  double eps = gc::kContactEps;
  double tie_threshold = gc::kTieLog10Threshold;
  double tie_abs_tol = 0.0;
  bool lenient = false;
  int threads = 0;
};

void run_analyze(const AnalyzeOpts& opt) {
  gc::DumpReader reader(opt.in, opt.lenient);
  gc::TripleWriter writer(opt.out);
  const double lambda_cap = std::pow(10.0, opt.tie_threshold);

  std::int64_t rows = 0, ties = 0, degenerate = 0, above = 0;
  std::vector<gc::ScoreRow> batch;
  std::vector<gc::ContactTriple> triples;
  constexpr std::size_t kBatch = 2048;
  for (bool more = true; more;) {
    batch.clear();
    while (batch.size() < kBatch) {
      auto row = reader.next();
      if (!row) {
        more = false;
        break;
      }
      batch.push_back(std::move(*row));
    }
    triples.assign(batch.size(), gc::ContactTriple{});
    gc::parallel_for(batch.size(), opt.threads, [&](std::size_t i) {
      triples[i] = gc::contact_triple(batch[i], opt.eps, opt.tie_abs_tol);
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {  // input order: deterministic output
      writer.write({batch[i].meta, triples[i]});
      ++rows;
      if (triples[i].is_tie) ++ties;
      else if (triples[i].degenerate) ++degenerate;
      else if (triples[i].lambda > lambda_cap) ++above;
    }
  }
  writer.close();
  std::cerr << "gapcount analyze: rows=" << rows << " exact_ties=" << ties
            << " degenerate=" << degenerate << " log10_lambda_gt_" << opt.tie_threshold << "="
            << above << " skipped=" << reader.skipped() << '\n';
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string family, params, n_grid, out, cell;
  std::string format = "text";
  std::string dtype = "f64";
  std::int64_t rows_per_n = 1;
};

void run_synth(const SynthOpts& opt) {
  const gc::cli::FamilySpec spec = gc::cli::load_family_spec(opt.family, opt.params);
  const auto grid = parse_int_list(opt.n_grid, "n-grid");
  if (opt.rows_per_n < 1) throw gc::input_error("--rows-per-n must be >= 1");
  const gc::DumpFormat fmt = opt.format == "binary" ? gc::DumpFormat::binary
                             : opt.format == "text"
                                 ? gc::DumpFormat::text
                                 : throw gc::input_error("--format must be text or binary");
  const gc::ScoreDtype dt = opt.dtype == "f32" ? gc::ScoreDtype::f32
                            : opt.dtype == "f64"
                                ? gc::ScoreDtype::f64
                                : throw gc::input_error("--dtype must be f32 or f64");

  gc::DumpWriter writer(opt.out, fmt, dt);
  const std::string cell = opt.cell.empty() ? opt.family : opt.cell;
  std::int64_t rows = 0;
  for (std::int64_t n : grid) {
    for (std::int64_t rep = 0; rep < opt.rows_per_n; ++rep) {
      gc::ScoreRow row = spec.make_row(n);
      row.meta.cell_id = cell;
      row.meta.layer = 0;
      row.meta.head = static_cast<int>(rep);
      row.meta.seq_id = "s0";
      row.meta.query_pos = 0;
      writer.write(row);
      ++rows;
    }
  }
  writer.close();
  std::cerr << "gapcount synth: wrote " << rows << " rows to " << opt.out << '\n';
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOpts {
  std::string in, out;
  std::string cells = "all";
  std::string n_grid;
  std::string tuple_key = "layer,head";
  std::string weighting = "plain";
  std::int64_t bootstrap = gc::kDefaultBootstrapB;
  std::uint64_t seed = 0;
  double tie_threshold = gc::kTieLog10Threshold;
  int threads = 0;
};

void run_fit(const FitOpts& opt) {
  std::uint64_t seed = opt.seed;
  if (const char* env = std::getenv("GAPCOUNT_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || env[0] == '-')
      throw gc::input_error("GAPCOUNT_SEED must be an unsigned integer");
    seed = v;
  }
  const gc::Weighting weighting = opt.weighting == "count" ? gc::Weighting::count
                                  : opt.weighting == "plain"
                                      ? gc::Weighting::plain
                                      : throw gc::input_error("--weighting must be plain or count");
  const auto tuple_key = parse_tuple_key(opt.tuple_key);
  std::vector<std::int64_t> fixed_grid;
  if (!opt.n_grid.empty()) {
    fixed_grid = parse_int_list(opt.n_grid, "n-grid");
    std::sort(fixed_grid.begin(), fixed_grid.end());
  }

  const auto records = gc::read_triples(opt.in);
  if (records.empty()) throw gc::estimation_error("no triples in " + opt.in);

  // group by cell id, first-appearance order
  std::vector<std::string> order;
  std::map<std::string, std::vector<gc::TripleRecord>> groups;
  for (const auto& rec : records) {
    auto [it, fresh] = groups.try_emplace(rec.meta.cell_id);
    if (fresh) order.push_back(rec.meta.cell_id);
    it->second.push_back(rec);
  }
  std::vector<std::string> selected;
  if (opt.cells == "all") {
    selected = order;
  } else {
    std::size_t pos = 0;
    while (pos <= opt.cells.size()) {
      const std::size_t comma = std::min(opt.cells.find(',', pos), opt.cells.size());
      const std::string id = opt.cells.substr(pos, comma - pos);
      if (!id.empty()) {
        if (groups.find(id) == groups.end())
          throw gc::input_error("cell '" + id + "' not present in " + opt.in);
        selected.push_back(id);
      }
      pos = comma + 1;
    }
    if (selected.empty()) throw gc::input_error("--cells selected nothing");
  }

  gc::AnalysisReport report;
  report.provenance.input_path = opt.in;
  report.provenance.input_digest = gc::fnv1a64_file(opt.in);
  report.provenance.seed = seed;
  report.provenance.bootstrap_B = opt.bootstrap;
  report.provenance.tie_log10_threshold = opt.tie_threshold;
  report.provenance.weighting = opt.weighting;
  report.provenance.n_grid = fixed_grid;
  for (gc::MetaField f : tuple_key) report.provenance.tuple_key.push_back(tuple_key_name(f));

  for (const auto& id : selected) {
    const auto& recs = groups.at(id);
    gc::Cell cell{id, {}, tuple_key};
    if (!fixed_grid.empty()) {
      cell.n_grid = fixed_grid;
    } else {
      std::vector<std::int64_t> ns;
      for (const auto& rec : recs)
        if (rec.meta.n >= 2) ns.push_back(rec.meta.n);
      std::sort(ns.begin(), ns.end());
      ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
      if (ns.size() < 2)
        throw gc::estimation_error("cell '" + id + "': fewer than 2 context lengths");
      cell.n_grid = ns;
    }

    gc::CellReport cr;
    cr.id = id;
    cr.n_grid = cell.n_grid;
    cr.buckets = gc::bucket_series(cell, recs, opt.tie_threshold);
    for (const auto& pt : cr.buckets.points) {
      cr.rows += pt.count + pt.tie_count;
      cr.excluded += pt.tie_count;
      if (!pt.valid())
        cr.warnings.push_back("n=" + std::to_string(pt.n) +
                              ": no surviving rows; grid point omitted from fits");
    }
    cr.tie_pct = cr.rows > 0 ? 100.0 * static_cast<double>(cr.excluded) /
                                   static_cast<double>(cr.rows)
                             : 0.0;
    cr.xi_lambda.fit = gc::ols_loglog(cr.buckets, gc::Coord::lambda, weighting);
    cr.xi_alpha.fit = gc::ols_loglog(cr.buckets, gc::Coord::alpha, weighting);
    cr.xi_delta.fit = gc::ols_loglog(cr.buckets, gc::Coord::delta, weighting);
    const gc::CoordBootstrap boot = gc::bootstrap_all(cell, recs, opt.bootstrap, seed, weighting,
                                                      opt.tie_threshold, opt.threads);
    cr.xi_lambda.bootstrap = boot.lambda;
    cr.xi_alpha.bootstrap = boot.alpha;
    cr.xi_delta.bootstrap = boot.delta;
    cr.decomposition_residual =
        gc::decomposition_residual(cr.xi_lambda.fit, cr.xi_alpha.fit, cr.xi_delta.fit);
    report.cells.push_back(std::move(cr));
  }

  gc::write_report(opt.out, report);
  for (const auto& c : report.cells) {
    std::cerr << "gapcount fit: cell " << c.id << " xi_lambda=" << c.xi_lambda.fit.slope << " (+-"
              << c.xi_lambda.bootstrap.half_iqr << ") xi_alpha=" << c.xi_alpha.fit.slope
              << " xi_delta=" << c.xi_delta.fit.slope << " tie_pct=" << c.tie_pct << '\n';
  }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOpts {
  std::string mode, in, family, params, grid, n_grid, out;
  double tie_abs_tol = 0.0;
  std::int64_t rows_per_n = 1;
};

void run_sweep(const SweepOpts& opt) {
  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw gc::input_error("cannot open output: " + opt.out);

  if (opt.mode == "gamma") {
    std::vector<gc::ScoreRow> rows;
    if (!opt.in.empty()) {
      gc::DumpReader reader(opt.in);
      while (auto row = reader.next()) rows.push_back(std::move(*row));
    } else if (!opt.family.empty()) {
      const gc::cli::FamilySpec spec = gc::cli::load_family_spec(opt.family, opt.params);
      for (std::int64_t n : parse_int_list(opt.n_grid, "n-grid"))
        for (std::int64_t rep = 0; rep < std::max<std::int64_t>(1, opt.rows_per_n); ++rep)
          rows.push_back(spec.make_row(n));
    } else {
      throw gc::input_error("gamma sweep needs --in DUMP or --family CFG");
    }
    const auto gammas =
        opt.grid.empty() ? gc::default_gamma_grid() : parse_double_list(opt.grid, "gamma grid");
    const auto table = gc::gamma_sweep(rows, gammas, opt.tie_abs_tol);
    out << "gamma,median_p_star,frac_p_star_le_inv_log_n,rows_used\n";
    for (const auto& pt : table)
      out << gc::format_g17(pt.gamma) << ',' << gc::format_g17(pt.median_p_star) << ','
          << gc::format_g17(pt.frac_below_inv_log_n) << ',' << pt.rows_used << '\n';
  } else if (opt.mode == "collapse") {
    if (opt.family.empty()) throw gc::input_error("collapse sweep needs --family CFG");
    const gc::cli::FamilySpec spec = gc::cli::load_family_spec(opt.family, opt.params);
    const auto s_values = opt.grid.empty() ? std::vector<double>{0.05, 0.2, 0.5, 2.0, 5.0, 20.0}
                                           : parse_double_list(opt.grid, "s grid");
    const auto grid = parse_int_list(opt.n_grid, "n-grid");
    const auto table = gc::collapse_sweep(
        [&](std::int64_t n) { return spec.make_row(n); }, s_values, grid);
    out << "s,n,lambda,beta,H,D,G,Z\n";
    for (const auto& pt : table)
      out << gc::format_g17(pt.s) << ',' << pt.n << ',' << gc::format_g17(pt.lambda) << ','
          << gc::format_g17(pt.beta) << ',' << gc::format_g17(pt.entropy) << ','
          << gc::format_g17(pt.top_two_gap) << ',' << gc::format_g17(pt.spread) << ','
          << gc::format_g17(pt.Z) << '\n';
  } else {
    throw gc::input_error("--mode must be gamma or collapse");
  }
  out.flush();
  if (!out) throw gc::input_error("write failed: " + opt.out);
}

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

struct ScheduleOpts {
  std::string kind;
  std::int64_t n = 0, n_train = 0;
  double xi = 1.0;
  bool xi_set = false;
  int d = 0;
};

void run_schedule(const ScheduleOpts& opt) {
  double value = 0;
  if (opt.kind == "legacy") {
    if (!opt.xi_set) throw gc::input_error("legacy schedule requires --xi");
    value = gc::legacy_multiplier(opt.n, opt.n_train, opt.xi);
  } else if (opt.kind == "yarn") {
    value = gc::yarn_beta(opt.n, opt.n_train);
  } else if (opt.kind == "ntk") {
    if (opt.d == 0) throw gc::input_error("ntk schedule requires --d");
    value = gc::dynamic_ntk_scale(opt.n, opt.n_train, opt.d);
  } else {
    throw gc::input_error("--kind must be legacy, yarn or ntk");
  }
  std::cout << gc::format_g17(value) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gap-counting diagnostics for attention score rows"};
  app.set_version_flag("--version", gc::kToolVersion);
  app.require_subcommand(1);

  AnalyzeOpts an;
  auto* analyze = app.add_subcommand("analyze", "per-row contact triples from a score dump");
  analyze->add_option("--in", an.in, "input dump (text or binary)")->required();
  analyze->add_option("--out", an.out, "output triples CSV")->required();
  analyze->add_option("--eps", an.eps, "contact-gap tolerance (relative slack on lambda)");
  analyze->add_option("--tie-threshold", an.tie_threshold,
                      "log10(lambda) reporting threshold (exclusion happens in fit)");
  analyze->add_option("--tie-abs-tol", an.tie_abs_tol, "absolute tie tolerance on gaps");
  analyze->add_flag("--lenient", an.lenient, "skip malformed records instead of failing");
  analyze->add_option("--threads", an.threads, "worker cap (0 = all cores)");

  SynthOpts sy;
  auto* synth = app.add_subcommand("synth", "generate a synthetic score-family dump");
  synth->add_option("--family", sy.family, "simplex|block|finite-contact")->required();
  synth->add_option("--params", sy.params, "family config JSON file");
  synth->add_option("--n-grid", sy.n_grid, "comma-separated context lengths")->required();
  synth->add_option("--out", sy.out, "output dump path")->required();
  synth->add_option("--format", sy.format, "text|binary (default text)");
  synth->add_option("--dtype", sy.dtype, "f64|f32 (default f64)");
  synth->add_option("--rows-per-n", sy.rows_per_n, "rows per grid point (head index varies)");
  synth->add_option("--cell", sy.cell, "cell id for the generated rows (default: family name)");

  FitOpts ft;
  auto* fit = app.add_subcommand("fit", "exponent estimates with bootstrap intervals");
  fit->add_option("--in", ft.in, "triples CSV from analyze")->required();
  fit->add_option("--out", ft.out, "output report JSON")->required();
  fit->add_option("--cells", ft.cells, "'all' or comma-separated cell ids");
  fit->add_option("--n-grid", ft.n_grid, "fixed n-grid (default: per-cell from data)");
  fit->add_option("--bootstrap", ft.bootstrap, "bootstrap draws B");
  fit->add_option("--seed", ft.seed, "bootstrap seed (env GAPCOUNT_SEED overrides)");
  fit->add_option("--weighting", ft.weighting, "plain|count bucket weighting");
  fit->add_option("--tuple-key", ft.tuple_key, "bootstrap unit fields (layer,head,seq,qpos)");
  fit->add_option("--tie-threshold", ft.tie_threshold, "log10(lambda) exclusion threshold");
  fit->add_option("--threads", ft.threads, "worker cap (0 = all cores)");

  SweepOpts sw;
  auto* sweep = app.add_subcommand("sweep", "gamma or collapse sweep tables");
  sweep->add_option("--mode", sw.mode, "gamma|collapse")->required();
  sweep->add_option("--in", sw.in, "input dump (gamma mode)");
  sweep->add_option("--family", sw.family, "family for generated rows");
  sweep->add_option("--params", sw.params, "family config JSON file");
  sweep->add_option("--grid", sw.grid, "gamma grid or s grid (defaults per mode)");
  sweep->add_option("--n-grid", sw.n_grid, "context lengths for generated rows");
  sweep->add_option("--out", sw.out, "output CSV")->required();
  sweep->add_option("--tie-abs-tol", sw.tie_abs_tol, "absolute tie tolerance on gaps");
  sweep->add_option("--rows-per-n", sw.rows_per_n, "rows per grid point (family source)");

  ScheduleOpts sc;
  auto* schedule = app.add_subcommand("schedule", "print a temperature-schedule scalar");
  schedule->add_option("--kind", sc.kind, "legacy|yarn|ntk")->required();
  schedule->add_option("--n", sc.n, "evaluation context length")->required();
  schedule->add_option("--n-train", sc.n_train, "training context length")->required();
  schedule->add_option("--xi", sc.xi, "legacy exponent")->each([&](const std::string&) {
    sc.xi_set = true;
  });
  schedule->add_option("--d", sc.d, "head dimension (ntk)");

  auto* verify = app.add_subcommand("verify", "run the built-in property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // unknown flags and friends: usage text, exit 1
  }

  try {
    if (*analyze) run_analyze(an);
    else if (*synth) run_synth(sy);
    else if (*fit) run_fit(ft);
    else if (*sweep) run_sweep(sw);
    else if (*schedule) run_schedule(sc);
    else if (*verify) return gc::cli::run_verify_suite() == 0 ? 0 : 1;
    return 0;
  } catch (const gc::estimation_error& e) {
    std::cerr << "gapcount: estimation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gapcount: error: " << e.what() << '\n';
    return 1;
  }
}

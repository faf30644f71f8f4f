#include "family_spec.hpp"

#include <cmath>
#include <fstream>

namespace gapcount::cli {

namespace {

using nlohmann::json;

ScaleRule parse_rule(const json& j, const std::string& name) {
  ScaleRule r;
  if (j.is_number()) {
    r.is_const = true;
    r.value = j.get<double>();
    return r;
  }
  if (j.is_object() && j.contains("a") && j.contains("p")) {
    r.is_const = false;
    r.a = j.at("a").get<double>();
    r.p = j.at("p").get<double>();
    return r;
  }
  throw input_error("family params: '" + name + "' must be a number or {\"a\":..,\"p\":..}");
}

}  // namespace

double ScaleRule::eval(std::int64_t n) const {
  if (is_const) return value;
  return a * std::pow(std::log(static_cast<double>(n)), p);
}

ScoreRow FamilySpec::make_row(std::int64_t n) const {
  switch (kind) {
    case Kind::simplex: {
      SimplexConfig cfg;
      cfg.n = n;
      cfg.delta = delta.eval(n);
      cfg.r_sq = r_sq_set ? r_sq : std::max(cfg.delta, 1.0);
      return simplex_row(cfg);
    }
    case Kind::block: {
      BlockConfig cfg;
      cfg.n = n;
      cfg.m = m;
      cfg.delta = delta.eval(n);
      cfg.tau = tau.eval(n);
      cfg.r_sq = r_sq_set ? r_sq : std::max(cfg.tau, 1.0);
      return block_row(cfg);
    }
    case Kind::finite_contact:
      return finite_contact_row(n);
  }
  throw input_error("unknown family kind");
}

FamilySpec parse_family_spec(const std::string& family, const nlohmann::json& params) {
  FamilySpec spec;
  if (family == "simplex") {
    spec.kind = FamilySpec::Kind::simplex;
    if (!params.contains("delta")) throw input_error("simplex params require 'delta'");
    spec.delta = parse_rule(params.at("delta"), "delta");
  } else if (family == "block") {
    spec.kind = FamilySpec::Kind::block;
    for (const char* key : {"m", "delta", "tau"})
      if (!params.contains(key))
        throw input_error(std::string("block params require '") + key + "'");
    spec.m = params.at("m").get<std::int64_t>();
    spec.delta = parse_rule(params.at("delta"), "delta");
    spec.tau = parse_rule(params.at("tau"), "tau");
  } else if (family == "finite-contact") {
    spec.kind = FamilySpec::Kind::finite_contact;
  } else {
    throw input_error("unknown family '" + family + "' (simplex|block|finite-contact)");
  }
  if (params.contains("r_sq")) {
    spec.r_sq = params.at("r_sq").get<double>();
    spec.r_sq_set = true;
  }
  return spec;
}

FamilySpec load_family_spec(const std::string& family, const std::string& params_path) {
  nlohmann::json params = nlohmann::json::object();
  if (!params_path.empty()) {
    std::ifstream in(params_path);
    if (!in) throw input_error("cannot open params file: " + params_path);
    try {
      in >> params;
    } catch (const std::exception& e) {
      throw input_error("bad params JSON in " + params_path + ": " + e.what());
    }
  } else if (family != "finite-contact") {
    throw input_error("--params is required for family '" + family + "'");
  }
  return parse_family_spec(family, params);
}

}  // namespace gapcount::cli

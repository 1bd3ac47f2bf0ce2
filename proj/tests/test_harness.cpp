#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/experiment.hpp"

using namespace stochls;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("stochls_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_logistic() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "small",
    "seeds": "0-3",
    "problem": {"kind": "logistic", "n": 4, "N": 300, "seed": 5},
    "accuracy": {"p_g": 0.8, "p_f": 0.8},
    "potential": {"regime": "nonconvex"},
    "stopping": {"measure": "grad", "max_iters": 3000},
    "eps_ladder": [0.1, 0.05, 0.02]
  })");
}

std::vector<SummaryRow> rows_for(const std::vector<double>& eps, const std::vector<double>& T) {
  std::vector<SummaryRow> rows;
  for (size_t i = 0; i < eps.size(); ++i)
    for (uint64_t s = 0; s < 10; ++s) rows.push_back({s, eps[i], static_cast<int64_t>(T[i]), false});
  return rows;
}

}  // namespace

TEST_CASE("rate fit on exact power laws") {
  const std::vector<double> eps = {0.5, 0.25, 0.125};
  std::vector<double> T;
  for (double e : eps) T.push_back(7 / (e * e));
  const RateFit f = fit_rate(rows_for(eps, T), Regime::nonconvex);
  REQUIRE_FALSE(f.refused);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.warnings.empty());
}

TEST_CASE("rate fit on a logarithmic law") {
  const std::vector<double> eps = {std::exp(-1.0), std::exp(-4.0), std::exp(-10.0)};
  const std::vector<double> T = {8, 17, 35};  // 3 log(1/eps) + 5
  const RateFit f = fit_rate(rows_for(eps, T), Regime::strongly_convex);
  CHECK(f.slope == doctest::Approx(3.0));
  CHECK(f.intercept == doctest::Approx(5.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("rate fit with censored seeds") {
  std::vector<SummaryRow> rows = rows_for({0.1, 0.01, 0.001}, {10, 100, 1000});
  rows[25].censored = true;  // one at the last level
  RateFit f = fit_rate(rows, Regime::convex);
  CHECK_FALSE(f.refused);
  CHECK(f.levels[2].censored == 1);
  CHECK(f.levels[2].used == 9);
  CHECK_FALSE(f.warnings.empty());
  for (auto& r : rows)
    if (r.eps == 0.001) r.censored = true;
  f = fit_rate(rows, Regime::convex);
  CHECK(f.refused);
  CHECK(f.reason.find("censored") != std::string::npos);
  CHECK_THROWS(fit_rate(rows_for({0.1, 0.01}, {1, 2}), Regime::convex));
}

TEST_CASE("least squares") {
  const LinearFit f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
  CHECK_THROWS(least_squares({1, 1}, {1, 2}));
}

TEST_CASE("config schema") {
  CHECK_NOTHROW(parse_config(small_logistic()).validate());
  json j = small_logistic();
  j["bogus"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_logistic();
  j["accuracy"]["kappa"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_logistic();
  j.erase("schema_version");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_logistic();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_logistic();
  j["seeds"] = json::array();
  CHECK_THROWS_AS(parse_config(j).validate(), ConfigError);
  j = small_logistic();
  j["eps_ladder"] = {0.1, 0.2, 0.01};
  CHECK_THROWS_AS(parse_config(j).validate(), ConfigError);
  j = small_logistic();
  j["accuracy"]["p_g"] = "most";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_logistic();
  j["accuracy"]["p_g"] = "threshold";
  CHECK(parse_config(j).p_g_at_threshold);
  j = small_logistic();
  j["problem"]["kind"] = "rosenbrock";
  CHECK_THROWS(parse_config(j));
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("0-2,5") == std::vector<uint64_t>{0, 1, 2, 5});
  CHECK(parse_seed_list("7") == std::vector<uint64_t>{7});
  CHECK_THROWS(parse_seed_list("3-1"));
  CHECK_THROWS(parse_seed_list("a"));
}

TEST_CASE("threshold probabilities resolve from the constants") {
  json j = small_logistic();
  j["accuracy"]["p_g"] = "threshold";
  j["accuracy"]["p_f"] = "threshold";
  const ExperimentConfig c = parse_config(j);
  const auto p = make_builtin(c.problem);
  const LineSearchConfig ls = resolve_linesearch(c, p->metadata());
  const ConstantsReport k = theoretical_constants(ls, p->metadata());
  CHECK(ls.accuracy.p_g == doctest::Approx(16.0 / 17.0));
  CHECK(k.p_g_ok);
  CHECK(k.p_f_ok);
  CHECK(ls.accuracy.p_f < 1);
}

TEST_CASE("deterministic strongly convex run has a logarithmic rate") {
  json j = json::parse(R"({
    "schema_version": 1,
    "seeds": "0-9",
    "problem": {"kind": "quadratic_sc", "n": 5, "N": 20, "seed": 1, "noise": 0.0},
    "stopping": {"measure": "gap", "max_iters": 20000},
    "eps_ladder": [1e-2, 1e-4, 1e-6, 1e-8]
  })");
  const OptimizeResult r = run_optimize(parse_config(j));
  CHECK(r.regime == Regime::strongly_convex);
  REQUIRE(r.fit);
  REQUIRE_FALSE(r.fit->refused);
  CHECK(r.fit->r_squared >= 0.95);
  CHECK(r.fit->slope > 0);
  for (const auto& o : r.seeds) {
    CHECK(o.converged);
    CHECK(o.decrease_violations == 0);
    CHECK(o.success_violations == 0);
    CHECK(o.psi_negative == 0);
  }
}

TEST_CASE("output files and worker invariance") {
  const fs::path d1 = scratch("w1"), d3 = scratch("w3");
  ExperimentConfig c = parse_config(small_logistic());
  c.output_dir = d1.string();
  c.workers = 1;
  const OptimizeResult a = run_optimize(c);
  c.output_dir = d3.string();
  c.workers = 3;
  const OptimizeResult b = run_optimize(c);
  for (const char* f : {"summary.csv", "per_seed.csv", "rate_fit.csv", "run_info.json", "report.txt"}) {
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d3 / f));
  }
  for (uint64_t s = 0; s < 4; ++s) {
    const std::string name = "traces/seed_" + std::to_string(s) + ".csv";
    REQUIRE(fs::exists(d1 / name));
    CHECK(slurp(d1 / name) == slurp(d3 / name));
  }
  CHECK(a.summary_csv == b.summary_csv);

  const CsvTable t = read_csv((d1 / "summary.csv").string());
  CHECK(t.rows.size() == 12);
  CHECK(t.header == std::vector<std::string>{"seed", "eps", "T_eps", "censored"});
  const CsvTable tr = read_csv((d1 / "traces/seed_0.csv").string());
  CHECK(tr.column("phi") >= 0);
  CHECK(std::stod(tr.rows[0][static_cast<size_t>(tr.column("alpha"))]) == 1.0);

  const json info = json::parse(slurp(d1 / "run_info.json"));
  CHECK(info["schema_version"] == 1);
  CHECK(info["regime"] == "nonconvex");

  // report recomputes the same fit from disk
  const std::string rep = report_directory(d1.string());
  CHECK(rep.find(format_real(a.fit->slope)) != std::string::npos);
}

TEST_CASE("seeds are associative: a subset run reproduces the same per-seed rows") {
  ExperimentConfig c = parse_config(small_logistic());
  const OptimizeResult all = run_optimize(c);
  c.seeds = {2};
  const OptimizeResult one = run_optimize(c);
  REQUIRE(one.seeds.size() == 1);
  CHECK(one.seeds[0].T == all.seeds[2].T);
  CHECK(one.seeds[0].iterations == all.seeds[2].iterations);
}

TEST_CASE("censored levels show up in the report") {
  json j = small_logistic();
  j["stopping"]["max_iters"] = 3;
  j["eps_ladder"] = {1e-1, 1e-6, 1e-9};
  const fs::path d = scratch("censored");
  ExperimentConfig c = parse_config(j);
  c.output_dir = d.string();
  const OptimizeResult r = run_optimize(c);
  REQUIRE(r.fit);
  CHECK(r.fit->refused);
  CHECK(r.report.find("refused") != std::string::npos);
  const std::string rep = report_directory(d.string());
  CHECK(rep.find("fit refused") != std::string::npos);
  const CsvTable t = read_csv((d / "summary.csv").string());
  bool any = false;
  for (const auto& row : t.rows) any = any || row[3] == "1";
  CHECK(any);
}

TEST_CASE("renewal-reward mode") {
  json j = json::parse(R"({
    "schema_version": 1,
    "mode": "rrprocess",
    "rrprocess": {
      "trials": 2000, "seed": 4, "dp_depth": 8,
      "cells": [
        {"name": "fast", "p": 0.9, "h": {"kind": "identity"}},
        {"name": "flat", "p": 0.7, "h": {"kind": "constant", "value": 2.0}}
      ]
    }
  })");
  const fs::path d = scratch("rr");
  ExperimentConfig c = parse_config(j);
  c.output_dir = d.string();
  const RRResult r = run_rrprocess(c);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].estimate.satisfied);
  REQUIRE(r.cells[1].dp_mean);
  CHECK(*r.cells[1].dp_mean == doctest::Approx(50.0));
  CHECK(r.cells[1].dp_agrees);
  const CsvTable t = read_csv((d / "rr_grid.csv").string());
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[1][static_cast<size_t>(t.column("cell"))] == "flat");
  CHECK(report_directory(d.string()).find("2/2 cells") != std::string::npos);

  // the grid expands into p x levels x h cells
  json g = json::parse(slurp(fs::path(STOCHLS_CONFIG_DIR) / "rrprocess_grid.json"));
  CHECK(parse_config(g).cells.size() == 12);
}

TEST_CASE("error records") {
  const fs::path d = scratch("err");
  const std::string text = error_record(d.string(), 2, "ConfigError", "bad thing");
  const json e = json::parse(slurp(d / "error.json"));
  CHECK(e["exit_code"] == 2);
  CHECK(e["kind"] == "ConfigError");
  CHECK(e["message"] == "bad thing");
  CHECK(json::parse(text) == e);
}

TEST_CASE("csv helpers") {
  CHECK(csv_line({"a", "1", ""}) == "a,1,\n");
  CHECK(split_csv_line("a,1,") == std::vector<std::string>{"a", "1", ""});
  RandomSource rng(1);
  for (int t = 0; t < 1000; ++t) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(200)) - 100);
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(NAN) == "nan");
}

TEST_CASE("override precedence") {
  ExperimentConfig c = parse_config(small_logistic());
  c.workers = 1;
  setenv("STOCHLS_WORKERS", "4", 1);
  Overrides ov;
  apply_overrides(c, ov);
  CHECK(c.workers == 4);
  ov.workers = 2;
  ov.seeds = std::vector<uint64_t>{9};
  ov.exact_diagnostics = false;
  apply_overrides(c, ov);
  CHECK(c.workers == 2);
  CHECK(c.seeds == std::vector<uint64_t>{9});
  CHECK_FALSE(c.exact_diagnostics);
  setenv("STOCHLS_WORKERS", "x", 1);
  CHECK_THROWS_AS(apply_overrides(c, {}), ConfigError);
  unsetenv("STOCHLS_WORKERS");
}

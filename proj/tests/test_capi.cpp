#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stochls/stochls.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  stochls_string_free(s);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("stochls_capi_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char* kSmallRun = R"({
  "schema_version": 1,
  "seeds": "0-1",
  "problem": {"kind": "quadratic_sc", "n": 3, "N": 50, "seed": 2, "noise": 0.0},
  "stopping": {"measure": "gap", "max_iters": 2000},
  "eps_ladder": [1e-2, 1e-4, 1e-6]
})";

}  // namespace

TEST_CASE("version and error slot") {
  CHECK(std::string(stochls_version()) == "1.0.0");
  stochls_problem* p = nullptr;
  CHECK(stochls_problem_create("no_such_kind", 3, 10, 0, &p) == STOCHLS_CONFIG);
  CHECK(p == nullptr);
  CHECK(std::string(stochls_last_error()).size() > 0);
  CHECK(stochls_problem_create("quadratic_sc", 3, 10, 0, nullptr) == STOCHLS_INVALID_ARGUMENT);
}

TEST_CASE("problem handles") {
  stochls_problem* p = nullptr;
  REQUIRE(stochls_problem_create("logistic", 4, 100, 3, &p) == STOCHLS_OK);
  int64_t n = 0, N = 0;
  REQUIRE(stochls_problem_dimension(p, &n, &N) == STOCHLS_OK);
  CHECK(n == 4);
  CHECK(N == 100);
  std::vector<double> x(4), g(4);
  REQUIRE(stochls_problem_x0(p, x.data()) == STOCHLS_OK);
  double f = 0;
  REQUIRE(stochls_problem_value(p, x.data(), &f) == STOCHLS_OK);
  CHECK(std::isfinite(f));
  REQUIRE(stochls_problem_gradient(p, x.data(), g.data()) == STOCHLS_OK);
  // central differences
  for (int i = 0; i < 4; ++i) {
    std::vector<double> xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    double fp = 0, fm = 0;
    stochls_problem_value(p, xp.data(), &fp);
    stochls_problem_value(p, xm.data(), &fm);
    CHECK((fp - fm) / 2e-6 == doctest::Approx(g[i]).epsilon(1e-5));
  }
  x[0] = NAN;
  CHECK(stochls_problem_value(p, x.data(), &f) == STOCHLS_DOMAIN);
  char* meta = nullptr;
  REQUIRE(stochls_problem_metadata_json(p, &meta) == STOCHLS_OK);
  const std::string m = take(meta);
  CHECK(m.find("\"L\"") != std::string::npos);
  stochls_problem_destroy(p);
  stochls_problem_destroy(nullptr);

  REQUIRE(stochls_problem_create_json(kSmallRun, &p) == STOCHLS_OK);
  stochls_problem_dimension(p, &n, &N);
  CHECK(n == 3);
  CHECK(N == 50);
  stochls_problem_destroy(p);
  CHECK(stochls_problem_create_json("{not json", &p) == STOCHLS_CONFIG);
}

TEST_CASE("optimizer stepping through handles") {
  stochls_problem* p = nullptr;
  REQUIRE(stochls_problem_create("logistic", 4, 200, 1, &p) == STOCHLS_OK);
  stochls_optimizer *a = nullptr, *b = nullptr;
  REQUIRE(stochls_optimizer_create(p, nullptr, 42, 1, &a) == STOCHLS_OK);
  REQUIRE(stochls_optimizer_create(p, nullptr, 42, 0, &b) == STOCHLS_OK);
  double alpha_prev = 0;
  for (int k = 0; k < 50; ++k) {
    stochls_step_info ia{}, ib{};
    REQUIRE(stochls_optimizer_step(a, &ia) == STOCHLS_OK);
    REQUIRE(stochls_optimizer_step(b, &ib) == STOCHLS_OK);
    CHECK(ia.k == k);
    CHECK(ia.alpha == ib.alpha);
    CHECK(ia.fs == ib.fs);
    CHECK(ia.has_exact == 1);
    CHECK(ib.has_exact == 0);
    if (k > 0) CHECK((ia.alpha == alpha_prev || ia.alpha == 2 * alpha_prev || ia.alpha == alpha_prev / 2));
    double alpha = 0, delta = 0;
    int64_t kk = 0;
    stochls_optimizer_state(a, nullptr, &alpha, &delta, &kk);
    CHECK(kk == k + 1);
    if (ia.outcome == STOCHLS_STEP_UNSUCCESSFUL) CHECK(alpha == ia.alpha / 2);
    else CHECK(alpha == std::min(1.0, 2 * ia.alpha));
    alpha_prev = ia.alpha;
  }
  std::vector<double> xa(4), xb(4);
  stochls_optimizer_state(a, xa.data(), nullptr, nullptr, nullptr);
  stochls_optimizer_state(b, xb.data(), nullptr, nullptr, nullptr);
  CHECK(xa == xb);
  stochls_optimizer_destroy(a);
  stochls_optimizer_destroy(b);

  const char* bad = R"({"schema_version": 1, "linesearch": {"gamma": 0.5}})";
  stochls_optimizer* c = nullptr;
  CHECK(stochls_optimizer_create(p, bad, 0, 0, &c) == STOCHLS_CONFIG);
  stochls_problem_destroy(p);
}

TEST_CASE("sample sizes") {
  int64_t m = 0;
  REQUIRE(stochls_gradient_sample_size(1.0, 1.0, 0.75, 1.0, 1.0, &m) == STOCHLS_OK);
  CHECK(m == 4);
  REQUIRE(stochls_gradient_sample_size(1.0, 1.0, 0.75, 0.5, 1.0, &m) == STOCHLS_OK);
  CHECK(m == 16);
  CHECK(stochls_gradient_sample_size(-1.0, 1.0, 0.8, 1.0, 1.0, &m) == STOCHLS_INVALID_ARGUMENT);
  // accuracy term 1/(0.125 * 0.5^2) = 32 beats the radius term 1/(0.25 * 1) = 4
  REQUIRE(stochls_function_sample_size(1.0, 0.5, 0.0, 0.875, 0.5, 1.0, 1.0, 1.0, &m) == STOCHLS_OK);
  CHECK(m == 32);
}

TEST_CASE("renewal-reward estimate through the C API") {
  const char* block = R"({"trials": 1000, "cells": [{"p": 1.0, "h": {"kind": "constant", "value": 3.0}}]})";
  double mean = 0, lo = 0, hi = 0, bound = 0;
  REQUIRE(stochls_rr_estimate(block, 1, 2, &mean, &lo, &hi, &bound) == STOCHLS_OK);
  CHECK(mean == 34.0);
  CHECK(lo == hi);
  CHECK(bound == doctest::Approx(100.0 / 3 + 1));
  CHECK(stochls_rr_estimate(R"({"cells": [{"p": 0.4}]})", 1, 1, &mean, &lo, &hi, &bound) == STOCHLS_CONFIG);
}

TEST_CASE("whole runs and reports") {
  const fs::path d = scratch("run");
  const std::string ov = R"({"output_dir": ")" + d.string() + R"(", "workers": 2})";
  char* rep = nullptr;
  REQUIRE(stochls_run_config_json(kSmallRun, ov.c_str(), &rep) == STOCHLS_OK);
  CHECK(take(rep).find("rate fit") != std::string::npos);
  CHECK(fs::exists(d / "summary.csv"));
  CHECK(fs::exists(d / "traces" / "seed_1.csv"));
  REQUIRE(stochls_report_directory(d.string().c_str(), &rep) == STOCHLS_OK);
  CHECK(take(rep).find("slope") != std::string::npos);

  const fs::path e = scratch("bad");
  const std::string ov2 = R"({"output_dir": ")" + e.string() + R"("})";
  CHECK(stochls_run_config_json(R"({"schema_version": 1, "eps_ladder": [1]})", ov2.c_str(), &rep) == STOCHLS_CONFIG);
  CHECK(fs::exists(e / "error.json"));
  CHECK(stochls_run_config_file("/nonexistent.json", nullptr, &rep) == STOCHLS_CONFIG);
  CHECK(stochls_report_directory("/nonexistent_dir", &rep) != STOCHLS_OK);
}

TEST_CASE("lemma suite through the C API") {
  char* rep = nullptr;
  int ok = 0;
  REQUIRE(stochls_lemma_suite(40, 3, &rep, &ok) == STOCHLS_OK);
  CHECK(ok == 1);
  CHECK(take(rep).find("all checks passed") != std::string::npos);
}

TEST_CASE("command-line exit codes") {
  const fs::path d = scratch("cli");
  {
    std::ofstream bad(d / "bad.json");
    bad << R"({"schema_version": 1, "surprise": true})";
  }
  const std::string cli = STOCHLS_CLI_PATH;
  auto code = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(code(cli + " run " + (d / "bad.json").string() + " --out " + (d / "o").string()) == 2);
  CHECK(fs::exists(d / "o" / "error.json"));
  CHECK(code(cli + " run /nonexistent.json") == 2);
  CHECK(code(cli + " lemmas --instances 20 --seed 1") == 0);
  {
    std::ofstream good(d / "good.json");
    good << kSmallRun;
  }
  CHECK(code(cli + " run " + (d / "good.json").string() + " --out " + (d / "g").string() + " --seeds 0-2") == 0);
  CHECK(code(cli + " report " + (d / "g").string()) == 0);
}

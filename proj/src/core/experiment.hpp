#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/potential.hpp"
#include "core/ratefit.hpp"
#include "core/rrprocess.hpp"

namespace stochls {

struct SeedOutcome {
  uint64_t seed = 0;
  std::vector<int64_t> T;  // per eps; censored entries hold the iteration count
  std::vector<bool> censored;
  int64_t iterations = 0;
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
  int64_t region_excursions = 0;
  double phi0 = 0.0;
  double frac_alpha_ge_A_bar = 0.0;
  bool running_min_improves = false;
  double i_rate = 0.0;
  double j_rate = 0.0;
  double grad_capped_rate = 0.0;
  int64_t lower_bound_violations = 0;   // accurate gradient but ||grad f|| > (kappa_g alpha_max + 1)||g||
  int64_t success_violations = 0;       // accurate estimates below the threshold but unsuccessful
  int64_t decrease_violations = 0;      // accurate estimates, successful, insufficient true decrease
  int64_t psi_negative = 0;
};

struct OptimizeResult {
  Regime regime = Regime::nonconvex;
  ConstantsReport constants;
  std::vector<BoundReport> bounds;      // per eps, from the mean initial potential
  std::vector<double> stated_bounds;    // nonconvex closed form, per eps
  std::vector<SeedOutcome> seeds;
  std::vector<SummaryRow> rows;
  std::optional<RateFit> fit;
  std::string summary_csv;
  std::string report;
};

struct RRCellResult {
  std::string name;
  RRProcessConfig cfg;
  StopEstimate estimate;
  int64_t dp_states = -1;
  std::optional<double> dp_mean;
  bool dp_agrees = false;
};

struct RRResult {
  std::vector<RRCellResult> cells;
  std::string csv;
  std::string report;
};

struct Overrides {
  std::optional<std::vector<uint64_t>> seeds;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<bool> exact_diagnostics;
};

// CLI flag > environment (STOCHLS_WORKERS) > config file
void apply_overrides(ExperimentConfig& cfg, const Overrides& ov);

// The resolved line-search config (thresholds substituted) and the problem it runs on.
LineSearchConfig resolve_linesearch(const ExperimentConfig& cfg, const ProblemMetadata& meta);

OptimizeResult run_optimize(const ExperimentConfig& cfg);
RRResult run_rrprocess(const ExperimentConfig& cfg);

struct LemmaEntry {
  std::string name;
  int64_t instances = 0;
  int64_t failures = 0;
  std::string detail;
};

struct LemmaReport {
  std::vector<LemmaEntry> entries;
  bool all_passed() const;
  std::string text() const;
};

LemmaReport lemma_suite(int instances = 1000, uint64_t seed = 0);

// Recomputes the fit and bound table from a finished run directory.
std::string report_directory(const std::string& dir);

// Writes error.json into dir (if given) and returns the JSON text.
std::string error_record(const std::string& dir, int exit_code, const std::string& kind, const std::string& message);

}  // namespace stochls

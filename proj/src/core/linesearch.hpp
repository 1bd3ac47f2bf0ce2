#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/oracle.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"

namespace stochls {

enum class DirectionMode { steepest, general };
enum class StepOutcome { reliable, unreliable, unsuccessful };

const char* to_string(StepOutcome o);
const char* to_string(DirectionMode m);

struct LineSearchConfig {
  double gamma = 2.0;
  double theta = 0.5;
  double alpha_max = 1.0;
  double alpha0 = 1.0;
  double delta0 = 1.0;
  // 0 means delta0 * gamma^10
  double delta_max = 0.0;
  DirectionMode direction_mode = DirectionMode::steepest;
  AccuracyConfig accuracy;

  double resolved_delta_max() const;
  // also pushes theta into the accuracy block
  void sync();
  void validate() const;
};

struct IterateState {
  Vec x;
  double alpha = 0.0;
  double delta_sq = 0.0;
  int64_t k = 0;
  // last accepted gradient-estimate norm; seeds the batch-size guess
  double g_norm_hint = 1.0;
};

IterateState initial_state(const LineSearchConfig& cfg, const Vec& x0);

struct DescentDirection {
  Vec d;
  double beta = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
};

// Verifies the direction against its own certificate; throws CertificateError.
void check_direction(const DescentDirection& dir, const Vec& g);

using DirectionProvider = std::function<DescentDirection(const Vec& g)>;

DirectionProvider steepest_provider();
// d = -M g for symmetric positive definite M
DirectionProvider scaled_newton_provider(const Mat& M);

struct StepDiagnostics {
  double f_exact = 0.0;
  double gradnorm_exact = 0.0;
  double f_trial_exact = 0.0;
  bool i_k = false;
  bool j_k = false;
};

struct StepRecord {
  int64_t k = 0;
  StepOutcome outcome = StepOutcome::unsuccessful;
  double alpha = 0.0;     // step size used
  double delta_sq = 0.0;  // squared radius used
  double g_norm = 0.0;
  double gtd = 0.0;  // g'd
  double f0 = 0.0;
  double fs = 0.0;
  int64_t grad_batch = 0;
  int64_t f0_batch = 0;
  int64_t fs_batch = 0;
  bool grad_capped = false;
  bool fun_capped = false;
  double beta = 1.0, kappa1 = 1.0, kappa2 = 1.0;
  bool in_region = true;
  std::optional<StepDiagnostics> exact;
};

bool armijo_holds(double f0, double fs, double alpha, double theta, double gtd);
bool reliable_holds(double alpha, double gtd, double delta_sq);

struct StepContext {
  const Problem* problem = nullptr;
  const LineSearchConfig* cfg = nullptr;
  DirectionProvider provider;
  bool exact_diagnostics = false;
};

// One iteration. Mutates state, returns the record. Throws NumericalAbort.
StepRecord step(IterateState& state, const StepContext& ctx, RandomSource& rng);

// Same iteration with exact diagnostics supplied for x (avoids recomputation).
StepRecord step_with_exact(IterateState& state, const StepContext& ctx, RandomSource& rng, double f_exact,
                           const Vec& grad_exact, double* f_trial_exact_out);

struct StoppingSpec {
  std::vector<double> eps_grad;  // stop on ||grad f|| < eps
  std::vector<double> eps_gap;   // stop on f - f* < eps
  int64_t max_iters = 10000;

  void validate() const;
};

struct RunSummary {
  // hitting iteration per eps, -1 if never reached
  std::vector<int64_t> T_grad;
  std::vector<int64_t> T_gap;
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
  int64_t iterations = 0;
  int64_t region_excursions = 0;
  IterateState final_state;
};

struct IterateExact {
  double f = 0.0;
  double grad_norm = 0.0;
};

struct Trace {
  std::vector<StepRecord> records;
  // exact f and gradient norm at x_0 ... x_K (filled when diagnostics are on)
  std::vector<IterateExact> iterates;
  RunSummary summary;
};

struct RunOptions {
  bool exact_diagnostics = true;
  std::optional<Vec> x0;
  DirectionProvider provider;
};

Trace run(const Problem& problem, const LineSearchConfig& cfg, const StoppingSpec& stop, RandomSource& rng,
          const RunOptions& opts = {});

}  // namespace stochls

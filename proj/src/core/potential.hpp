#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/linesearch.hpp"
#include "core/oracle.hpp"

namespace stochls {

enum class Regime { nonconvex, convex, strongly_convex };

const char* to_string(Regime r);
Regime parse_regime(const std::string& s);
Regime default_regime(ConvexityClass c);

struct PotentialConfig {
  double nu = 0.5;
  double L = 1.0;
  double theta = 0.5;
  // f_min for the nonconvex variant, f* for the convex ones
  double f_ref = 0.0;
  double eps = 1e-2;
  Regime variant = Regime::nonconvex;

  void validate() const;
};

double phi_value(double f, double grad_norm, double alpha, double delta_sq, const PotentialConfig& cfg);
double phi(const IterateState& state, const Problem& problem, const PotentialConfig& cfg);
double psi_convex(double phi_stopped, double nu, double eps);
double psi_strongly_convex(double phi_stopped, double nu, double eps);

struct EventFlags {
  bool i_k = false;
  bool j_k = false;
};

EventFlags classify_events(const StepRecord& record);
EventFlags classify_events(const Problem& problem, const AccuracyConfig& acc, const Vec& x, const Vec& x_trial,
                           const Vec& g, double alpha, double f0, double fs);

// nu from 64 (kappa_g alpha_max + 1)^2 (steepest) or its general-direction analogue
double theorem_nu(const LineSearchConfig& cfg, double beta = 1.0, double kappa1 = 1.0, double kappa2 = 1.0);

struct ConstantsOptions {
  // bounds from the general expected-decrease theorem instead of the simplified one
  bool general_bounds = false;
  double beta = 1.0, kappa1 = 1.0, kappa2 = 1.0;
  std::optional<double> nu;  // overrides the automatic choice
};

struct ConstantsReport {
  double nu = 0.0;
  double nu_ratio_required = 0.0;  // lower bound on nu/(1-nu)
  double p_g_required = 0.0;
  double product_required = 0.0;  // lower bound on p_g p_f / sqrt(1 - p_f)
  double product_actual = 0.0;
  bool p_g_ok = false;
  bool p_f_feasible = false;
  double p_f_required = 0.0;  // smallest p_f meeting the product bound at the configured p_g
  bool p_f_ok = false;
  double A_bar = 0.0;         // step-size threshold
  double A_bar_grid = 0.0;    // largest grid step size <= A_bar
  double decrease_constant = 0.0;  // 1/(8192 (kappa_g alpha_max + 1)^2)
  std::vector<std::string> warnings;
};

ConstantsReport theoretical_constants(const LineSearchConfig& cfg, const ProblemMetadata& meta,
                                      const ConstantsOptions& opts = {});

struct BoundReport {
  Regime regime = Regime::nonconvex;
  bool available = false;
  std::string reason;
  double theta_const = 0.0;
  double h_at_A_bar = 0.0;
  double psi0 = 0.0;
  double bound = 0.0;
};

// Predicted E[T_eps] bound. phi0 is the potential at the start (regime variant).
BoundReport predicted_bound(Regime regime, const LineSearchConfig& cfg, const ProblemMetadata& meta,
                            const ConstantsReport& consts, double phi0, double eps);
// the nonconvex bound exactly as stated with the fixed 1/16384 constant
double nonconvex_stated_bound(const LineSearchConfig& cfg, const ProblemMetadata& meta, double phi0, double eps);

// smallest grid step gamma^j alpha_max (j <= 0) not exceeding a
double grid_floor(double a, double alpha_max, double gamma);

// trace checks
double fraction_alpha_at_least(const std::vector<StepRecord>& records, double a_bar);
bool running_min_improves(const std::vector<IterateExact>& iterates, double head_fraction = 0.1);

// One-step changes of phi from a fixed state over independent rng streams.
std::vector<double> one_step_phi_changes(const Problem& problem, const LineSearchConfig& cfg,
                                         const IterateState& state, const PotentialConfig& pcfg,
                                         uint64_t master_seed, int count);

}  // namespace stochls

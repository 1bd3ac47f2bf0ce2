#include "core/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/errors.hpp"

namespace stochls {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::nonconvex: return "nonconvex";
    case Regime::convex: return "convex";
    case Regime::strongly_convex: return "strongly_convex";
  }
  return "?";
}

Regime parse_regime(const std::string& s) {
  if (s == "nonconvex") return Regime::nonconvex;
  if (s == "convex") return Regime::convex;
  if (s == "strongly_convex") return Regime::strongly_convex;
  throw ConfigError("unknown regime '" + s + "'");
}

Regime default_regime(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::nonconvex: return Regime::nonconvex;
    case ConvexityClass::convex: return Regime::convex;
    case ConvexityClass::strongly_convex: return Regime::strongly_convex;
  }
  return Regime::nonconvex;
}

void PotentialConfig::validate() const {
  if (!(nu > 0 && nu < 1)) throw ConfigError("potential: nu must lie in (0, 1)");
  if (!(L > 0)) throw ConfigError("potential: L must be > 0");
  if (!(theta > 0 && theta < 1)) throw ConfigError("potential: theta must lie in (0, 1)");
  if (!(eps > 0)) throw ConfigError("potential: eps must be > 0");
  if (!std::isfinite(f_ref)) throw ConfigError("potential: reference value must be finite");
}

double phi_value(double f, double grad_norm, double alpha, double delta_sq, const PotentialConfig& cfg) {
  return cfg.nu * (f - cfg.f_ref) + (1 - cfg.nu) * alpha * grad_norm * grad_norm / (cfg.L * cfg.L) +
         (1 - cfg.nu) * cfg.theta * delta_sq;
}

double phi(const IterateState& state, const Problem& problem, const PotentialConfig& cfg) {
  const double f = exact_value(problem, state.x);
  const double gn = exact_gradient(problem, state.x).norm();
  return phi_value(f, gn, state.alpha, state.delta_sq, cfg);
}

double psi_convex(double phi_stopped, double nu, double eps) {
  if (!(phi_stopped > 0)) throw std::domain_error("stopped potential must be positive");
  return 1.0 / (nu * eps) - 1.0 / phi_stopped;
}

double psi_strongly_convex(double phi_stopped, double nu, double eps) {
  if (!(phi_stopped > 0)) throw std::domain_error("stopped potential must be positive");
  return std::log(phi_stopped) + std::log(1.0 / (nu * eps));
}

EventFlags classify_events(const StepRecord& record) {
  if (!record.exact) throw std::logic_error("event classification needs exact diagnostics");
  return {record.exact->i_k, record.exact->j_k};
}

EventFlags classify_events(const Problem& problem, const AccuracyConfig& acc, const Vec& x, const Vec& x_trial,
                           const Vec& g, double alpha, double f0, double fs) {
  EventFlags e;
  e.i_k = gradient_accurate(g, exact_gradient(problem, x), alpha, acc.kappa_g);
  e.j_k = function_pair_accurate(f0, fs, exact_value(problem, x), exact_value(problem, x_trial), alpha, g.norm(),
                                 acc.kappa_f);
  return e;
}

double theorem_nu(const LineSearchConfig& cfg, double beta, double kappa1, double kappa2) {
  double ratio = 0.0;
  if (cfg.direction_mode == DirectionMode::steepest) {
    const double t = cfg.accuracy.kappa_g * cfg.alpha_max + 1;
    ratio = 64 * t * t;
  } else {
    const double t = std::max(cfg.accuracy.kappa_g, 2 * kappa2) * cfg.alpha_max + 1;
    ratio = 64 * t * t / (kappa1 * beta);
  }
  return ratio / (1 + ratio);
}

double grid_floor(double a, double alpha_max, double gamma) {
  if (!(a > 0)) return 0.0;
  if (a >= alpha_max) return alpha_max;
  double j = std::ceil(std::log(alpha_max / a) / std::log(gamma) - 1e-12);
  double v = alpha_max * std::pow(gamma, -j);
  while (v > a) v /= gamma;
  return v;
}

ConstantsReport theoretical_constants(const LineSearchConfig& cfg, const ProblemMetadata& meta,
                                      const ConstantsOptions& opts) {
  const AccuracyConfig& acc = cfg.accuracy;
  const double g = cfg.gamma;
  const double th = cfg.theta;
  const double am = cfg.alpha_max;
  const double L = meta.lipschitz_L;
  const double kg = acc.kappa_g;
  const double kf = acc.kappa_f;
  const double kfb = acc.kappa_f_bar;
  const double t = kg * am + 1;
  const bool general_dir = cfg.direction_mode == DirectionMode::general;

  ConstantsReport r;
  r.nu = opts.nu ? *opts.nu : theorem_nu(cfg, opts.beta, opts.kappa1, opts.kappa2);
  const double nu = r.nu;
  r.p_g_required = 2 * g / (0.5 * (1 - 1 / g) + 2 * g);
  if (opts.general_bounds || general_dir) {
    double th_eff = th;
    if (general_dir) th_eff = th * opts.kappa1 * opts.beta;
    r.nu_ratio_required = std::max({32 * g * am * am / th_eff, 16 * (g - 1), 16 * g * t * t / th_eff});
    const double denom = (1 - nu) * (1 - 1 / g);
    r.product_required = std::max((8 * L * L * nu * kfb + 16 * g * (1 - nu)) / denom, 8 * nu / denom);
  } else {
    r.nu_ratio_required = 64 * t * t;
    r.product_required = std::max(1024 * kfb * L * L * t * t + 64, 1024 * t * t);
  }
  const double pg = acc.p_g, pf = acc.p_f;
  r.product_actual = pf < 1 ? pg * pf / std::sqrt(1 - pf) : INFINITY;
  r.p_g_ok = pg >= r.p_g_required;
  r.p_f_feasible = std::isfinite(r.product_required);
  if (r.p_f_feasible) {
    // p_g (1 - q) / sqrt(q) = P  solved for s = sqrt(q)
    const double P = r.product_required;
    const double s = 2 * pg / (P + std::sqrt(P * P + 4 * pg * pg));
    r.p_f_required = 1 - s * s;
    if (r.p_f_required <= 0.5) r.p_f_required = 0.5;
  } else {
    r.p_f_required = 1.0;
  }
  r.p_f_ok = r.product_actual >= r.product_required;
  if (nu / (1 - nu) < r.nu_ratio_required * (1 - 1e-12))
    r.warnings.push_back("nu below the required lower bound");
  if (!r.p_g_ok) r.warnings.push_back("p_g below the required threshold");
  if (!r.p_f_feasible) r.warnings.push_back("p_f threshold infeasible");
  else if (!r.p_f_ok) r.warnings.push_back("p_g p_f / sqrt(1 - p_f) below the required threshold");
  if (kf > th / (4 * am) * (1 + 1e-12)) r.warnings.push_back("kappa_f exceeds theta / (4 alpha_max)");

  if (general_dir) {
    r.A_bar = std::min(am, opts.beta * (1 - th) / (kg + L * opts.kappa2 / 2 + 2 * kf / opts.kappa1));
  } else {
    r.A_bar = std::min((1 - th) / (kg + L / 2 + 2 * kf), am);
  }
  r.A_bar_grid = grid_floor(r.A_bar, am, g);
  r.decrease_constant = 1.0 / (8192 * t * t);
  return r;
}

namespace {

double renewal_bound(double p, double psi0, double theta_const, double h) {
  return p / (2 * p - 1) * psi0 / (theta_const * h) + 1;
}

}  // namespace

BoundReport predicted_bound(Regime regime, const LineSearchConfig& cfg, const ProblemMetadata& meta,
                            const ConstantsReport& consts, double phi0, double eps) {
  BoundReport b;
  b.regime = regime;
  const double p = cfg.accuracy.p_g * cfg.accuracy.p_f;
  if (!(p > 0.5)) {
    b.reason = "p_g p_f must exceed 1/2";
    return b;
  }
  const double nu = consts.nu;
  const double g = cfg.gamma;
  const double L = meta.lipschitz_L;
  const double base = p * (1 - nu) * (1 - 1 / g);
  const double A = consts.A_bar_grid;
  switch (regime) {
    case Regime::nonconvex: {
      b.theta_const = base / (4 * L * L);
      b.h_at_A_bar = A * eps * eps;
      b.psi0 = phi0;
      break;
    }
    case Regime::convex: {
      if (!meta.domain_diameter_D || !meta.grad_bound_Lf) {
        b.reason = "needs the domain diameter and gradient bound";
        return b;
      }
      const double c = nu * *meta.domain_diameter_D * L + (1 - nu) * cfg.alpha_max * *meta.grad_bound_Lf / L +
                       (1 - nu) * std::sqrt(cfg.theta) * cfg.resolved_delta_max();
      b.theta_const = base / (8 * c * c);
      b.h_at_A_bar = A;
      if (!(phi0 > 0)) {
        b.reason = "initial potential must be positive";
        return b;
      }
      b.psi0 = psi_convex(phi0, nu, eps);
      break;
    }
    case Regime::strongly_convex: {
      const double mu = meta.strong_convexity_mu;
      if (!(mu > 0)) {
        b.reason = "needs strong convexity";
        return b;
      }
      const double c = nu * L * L / (2 * mu) + (1 - nu) * cfg.alpha_max + (1 - nu);
      b.theta_const = base / (4 * c);
      b.h_at_A_bar = A;
      if (!(phi0 > 0)) {
        b.reason = "initial potential must be positive";
        return b;
      }
      b.psi0 = psi_strongly_convex(phi0, nu, eps);
      break;
    }
  }
  b.available = true;
  b.bound = renewal_bound(p, std::max(0.0, b.psi0), b.theta_const, b.h_at_A_bar);
  return b;
}

double nonconvex_stated_bound(const LineSearchConfig& cfg, const ProblemMetadata& meta, double phi0, double eps) {
  const double p = cfg.accuracy.p_g * cfg.accuracy.p_f;
  const double L = meta.lipschitz_L;
  const double kg = cfg.accuracy.kappa_g, kf = cfg.accuracy.kappa_f;
  const double t = kg * cfg.alpha_max + 1;
  const double Theta = 1.0 / 16384.0;
  return p / (2 * p - 1) * L * L * (kg + L / 2 + 2 * kf) * t * t / (Theta * eps * eps) * phi0 + 1;
}

double fraction_alpha_at_least(const std::vector<StepRecord>& records, double a_bar) {
  if (records.empty()) return 0.0;
  int64_t c = 0;
  for (const auto& r : records) c += r.alpha >= a_bar ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(records.size());
}

bool running_min_improves(const std::vector<IterateExact>& iterates, double head_fraction) {
  if (iterates.size() < 2) return false;
  const size_t head = std::max<size_t>(1, static_cast<size_t>(std::ceil(head_fraction * iterates.size())));
  double head_min = INFINITY, all_min = INFINITY;
  for (size_t i = 0; i < iterates.size(); ++i) {
    all_min = std::min(all_min, iterates[i].grad_norm);
    if (i < head) head_min = all_min;
  }
  return all_min < head_min;
}

std::vector<double> one_step_phi_changes(const Problem& problem, const LineSearchConfig& cfg,
                                         const IterateState& state, const PotentialConfig& pcfg,
                                         uint64_t master_seed, int count) {
  const double phi_before = phi(state, problem, pcfg);
  StepContext ctx;
  ctx.problem = &problem;
  ctx.cfg = &cfg;
  ctx.exact_diagnostics = false;
  const RandomSource master(master_seed);
  std::vector<double> out;
  out.reserve(static_cast<size_t>(count));
  for (int m = 0; m < count; ++m) {
    IterateState s = state;
    RandomSource r = master.fork(static_cast<uint64_t>(m));
    step(s, ctx, r);
    out.push_back(phi(s, problem, pcfg) - phi_before);
  }
  return out;
}

}  // namespace stochls

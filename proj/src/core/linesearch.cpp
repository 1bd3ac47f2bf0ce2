#include "core/linesearch.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "core/errors.hpp"

namespace stochls {

const char* to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::reliable: return "reliable";
    case StepOutcome::unreliable: return "unreliable";
    case StepOutcome::unsuccessful: return "unsuccessful";
  }
  return "?";
}

const char* to_string(DirectionMode m) { return m == DirectionMode::steepest ? "steepest" : "general"; }

double LineSearchConfig::resolved_delta_max() const {
  return delta_max > 0 ? delta_max : delta0 * std::pow(gamma, 10);
}

void LineSearchConfig::sync() { accuracy.theta = theta; }

void LineSearchConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("linesearch: " + m); };
  if (!(gamma > 1 && std::isfinite(gamma))) fail("gamma must be > 1");
  if (!(theta > 0 && theta < 1)) fail("theta must lie in (0, 1)");
  if (!(alpha_max > 0 && std::isfinite(alpha_max))) fail("alpha_max must be > 0");
  if (!(alpha0 > 0 && alpha0 <= alpha_max)) fail("alpha0 must lie in (0, alpha_max]");
  const double j0 = std::log(alpha_max / alpha0) / std::log(gamma);
  if (std::abs(j0 - std::round(j0)) > 1e-12) fail("alpha0 must be alpha_max times an integer power of gamma");
  if (accuracy.kappa_f > theta / (4 * alpha_max) * (1 + 1e-12)) fail("kappa_f must not exceed theta / (4 alpha_max)");
  if (!(delta0 > 0 && std::isfinite(delta0))) fail("delta0 must be > 0");
  if (delta_max < 0 || (delta_max > 0 && delta_max < delta0)) fail("delta_max must be >= delta0");
  if (accuracy.theta != theta) fail("accuracy theta differs from line-search theta");
  accuracy.validate();
}

IterateState initial_state(const LineSearchConfig& cfg, const Vec& x0) {
  IterateState s;
  s.x = x0;
  s.alpha = cfg.alpha0;
  s.delta_sq = cfg.delta0 * cfg.delta0;
  s.k = 0;
  s.g_norm_hint = 1.0;
  return s;
}

void check_direction(const DescentDirection& dir, const Vec& g) {
  if (dir.d.size() != g.size()) throw CertificateError("direction has wrong dimension");
  if (!(dir.beta > 0 && dir.beta <= 1)) throw CertificateError("beta must lie in (0, 1]");
  if (!(dir.kappa1 > 0 && dir.kappa2 >= dir.kappa1)) throw CertificateError("need 0 < kappa1 <= kappa2");
  const double gn = g.norm();
  const double dn = dir.d.norm();
  const double tol = 1e-12;
  if (gn == 0) {
    if (dn != 0) throw CertificateError("nonzero direction for a zero gradient");
    return;
  }
  if (dn < dir.kappa1 * gn * (1 - tol) || dn > dir.kappa2 * gn * (1 + tol))
    throw CertificateError("direction norm outside [kappa1 ||g||, kappa2 ||g||]");
  const double cosang = -g.dot(dir.d) / (gn * dn);
  if (cosang < dir.beta * (1 - tol)) throw CertificateError("direction angle bound violated");
}

DirectionProvider steepest_provider() {
  return [](const Vec& g) { return DescentDirection{-g, 1.0, 1.0, 1.0}; };
}

DirectionProvider scaled_newton_provider(const Mat& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("scaling matrix must be square");
  if (!M.isApprox(M.transpose(), 1e-12)) throw std::invalid_argument("scaling matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0)) throw std::invalid_argument("scaling matrix must be positive definite");
  return [M, lo, hi](const Vec& g) { return DescentDirection{-(M * g), lo / hi, lo, hi}; };
}

bool armijo_holds(double f0, double fs, double alpha, double theta, double gtd) {
  return fs <= f0 + alpha * theta * gtd;
}

bool reliable_holds(double alpha, double gtd, double delta_sq) { return -alpha * gtd >= delta_sq; }

void StoppingSpec::validate() const {
  for (double e : eps_grad)
    if (!(e > 0)) throw ConfigError("stopping: eps values must be > 0");
  for (double e : eps_gap)
    if (!(e > 0)) throw ConfigError("stopping: eps values must be > 0");
  if (max_iters < 0) throw ConfigError("stopping: max_iters must be >= 0");
}

namespace {

struct ExactAtX {
  double f;
  const Vec* grad;
};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalAbort(std::string("non-finite ") + what);
}

StepRecord step_impl(IterateState& state, const StepContext& ctx, RandomSource& rng, const ExactAtX* exact,
                     double* f_trial_exact_out) {
  const Problem& p = *ctx.problem;
  const LineSearchConfig& cfg = *ctx.cfg;
  if (!(state.alpha >= 1e-300)) throw NumericalAbort("step size underflow");
  if (!(state.delta_sq >= 1e-300)) throw NumericalAbort("radius underflow");

  RandomSource rng_k = rng.fork(static_cast<uint64_t>(state.k));
  RandomSource rg = rng_k.fork("grad");
  RandomSource rf = rng_k.fork("fun");

  StepRecord rec;
  rec.k = state.k;
  rec.alpha = state.alpha;
  rec.delta_sq = state.delta_sq;

  const GradientEstimate ge = estimate_gradient(p, state.x, state.alpha, cfg.accuracy, rg, state.g_norm_hint);
  const Vec& g = ge.g;
  rec.g_norm = g.norm();
  rec.grad_batch = ge.batch_size;
  rec.grad_capped = ge.capped;

  Vec d;
  if (cfg.direction_mode == DirectionMode::steepest) {
    d = -g;
    rec.gtd = -g.squaredNorm();
  } else {
    const DirectionProvider& prov = ctx.provider ? ctx.provider : steepest_provider();
    DescentDirection dir = prov(g);
    check_direction(dir, g);
    rec.beta = dir.beta;
    rec.kappa1 = dir.kappa1;
    rec.kappa2 = dir.kappa2;
    d = std::move(dir.d);
    rec.gtd = g.dot(d);
  }
  require_finite(rec.gtd, "directional derivative");

  const Vec trial = state.x + state.alpha * d;
  for (Eigen::Index j = 0; j < trial.size(); ++j) require_finite(trial(j), "trial point");

  const FunctionEstimatePair fp =
      estimate_function_pair(p, state.x, trial, state.alpha, rec.g_norm, std::sqrt(state.delta_sq), cfg.accuracy, rf);
  require_finite(fp.f0, "function estimate");
  require_finite(fp.fs, "function estimate");
  rec.f0 = fp.f0;
  rec.fs = fp.fs;
  rec.f0_batch = fp.batch_size_0;
  rec.fs_batch = fp.batch_size_s;
  rec.fun_capped = fp.capped;

  if (ctx.exact_diagnostics) {
    StepDiagnostics dg;
    Vec grad_local;
    if (exact) {
      dg.f_exact = exact->f;
      grad_local = *exact->grad;
    } else {
      dg.f_exact = exact_value(p, state.x);
      grad_local = exact_gradient(p, state.x);
    }
    dg.gradnorm_exact = grad_local.norm();
    dg.f_trial_exact = exact_value(p, trial);
    dg.i_k = gradient_accurate(g, grad_local, state.alpha, cfg.accuracy.kappa_g);
    dg.j_k = function_pair_accurate(fp.f0, fp.fs, dg.f_exact, dg.f_trial_exact, state.alpha, rec.g_norm,
                                    cfg.accuracy.kappa_f);
    if (f_trial_exact_out) *f_trial_exact_out = dg.f_trial_exact;
    rec.exact = dg;
  }

  const double gamma = cfg.gamma;
  const double dmax = cfg.resolved_delta_max();
  if (armijo_holds(fp.f0, fp.fs, state.alpha, cfg.theta, rec.gtd)) {
    state.x = trial;
    rec.in_region = p.metadata().in_region(state.x);
    state.alpha = std::min(cfg.alpha_max, gamma * state.alpha);
    if (reliable_holds(rec.alpha, rec.gtd, rec.delta_sq)) {
      rec.outcome = StepOutcome::reliable;
      state.delta_sq = std::min(gamma * state.delta_sq, dmax * dmax);
    } else {
      rec.outcome = StepOutcome::unreliable;
      state.delta_sq = state.delta_sq / gamma;
    }
  } else {
    rec.outcome = StepOutcome::unsuccessful;
    rec.in_region = p.metadata().in_region(state.x);
    state.alpha = state.alpha / gamma;
    state.delta_sq = state.delta_sq / gamma;
  }
  if (rec.g_norm > 0) state.g_norm_hint = rec.g_norm;
  state.k += 1;
  return rec;
}

}  // namespace

StepRecord step(IterateState& state, const StepContext& ctx, RandomSource& rng) {
  return step_impl(state, ctx, rng, nullptr, nullptr);
}

StepRecord step_with_exact(IterateState& state, const StepContext& ctx, RandomSource& rng, double f_exact,
                           const Vec& grad_exact, double* f_trial_exact_out) {
  ExactAtX e{f_exact, &grad_exact};
  return step_impl(state, ctx, rng, &e, f_trial_exact_out);
}

Trace run(const Problem& problem, const LineSearchConfig& cfg, const StoppingSpec& stop, RandomSource& rng,
          const RunOptions& opts) {
  cfg.validate();
  stop.validate();
  const ProblemMetadata& meta = problem.metadata();
  if (!stop.eps_gap.empty() && !meta.f_star)
    throw std::invalid_argument("gap-based stopping needs a known optimal value");

  Trace tr;
  RunSummary& sum = tr.summary;
  sum.T_grad.assign(stop.eps_grad.size(), -1);
  sum.T_gap.assign(stop.eps_gap.size(), -1);

  StepContext ctx;
  ctx.problem = &problem;
  ctx.cfg = &cfg;
  ctx.provider = opts.provider;
  ctx.exact_diagnostics = opts.exact_diagnostics;

  IterateState state = initial_state(cfg, opts.x0 ? *opts.x0 : meta.x0);
  if (state.x.size() != problem.dimension()) throw std::invalid_argument("x0 has wrong dimension");

  const bool need_f = opts.exact_diagnostics || !stop.eps_gap.empty();
  const bool need_g = opts.exact_diagnostics || !stop.eps_grad.empty();
  bool have_f = false, have_g = false;
  double f_x = 0.0;
  Vec grad_x;

  if (stop.max_iters > 0) {
    for (int64_t k = 0;; ++k) {
      if (need_f && !have_f) {
        f_x = exact_value(problem, state.x);
        have_f = true;
      }
      if (need_g && !have_g) {
        grad_x = exact_gradient(problem, state.x);
        have_g = true;
      }
      const double gn = need_g ? grad_x.norm() : 0.0;
      if (opts.exact_diagnostics) tr.iterates.push_back({f_x, gn});

      bool all_hit = true;
      for (size_t e = 0; e < stop.eps_grad.size(); ++e) {
        if (sum.T_grad[e] < 0 && gn < stop.eps_grad[e]) sum.T_grad[e] = k;
        all_hit = all_hit && sum.T_grad[e] >= 0;
      }
      for (size_t e = 0; e < stop.eps_gap.size(); ++e) {
        if (sum.T_gap[e] < 0 && f_x - *meta.f_star < stop.eps_gap[e]) sum.T_gap[e] = k;
        all_hit = all_hit && sum.T_gap[e] >= 0;
      }
      const bool has_targets = !stop.eps_grad.empty() || !stop.eps_gap.empty();
      if (has_targets && all_hit) {
        sum.converged = true;
        break;
      }
      if (k >= stop.max_iters) break;

      try {
        double f_trial = 0.0;
        StepRecord rec = opts.exact_diagnostics
                             ? step_with_exact(state, ctx, rng, f_x, grad_x, &f_trial)
                             : step(state, ctx, rng);
        if (rec.outcome != StepOutcome::unsuccessful) {
          if (!rec.in_region) sum.region_excursions += 1;
          have_g = false;
          if (opts.exact_diagnostics) {
            f_x = f_trial;
          } else {
            have_f = false;
          }
        }
        tr.records.push_back(std::move(rec));
      } catch (const NumericalAbort& e) {
        sum.aborted = true;
        sum.abort_reason = e.what();
        break;
      }
    }
  }
  sum.iterations = static_cast<int64_t>(tr.records.size());
  sum.final_state = state;
  return tr;
}

}  // namespace stochls

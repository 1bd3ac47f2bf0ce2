#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "core/errors.hpp"
#include "core/experiment.hpp"

namespace stochls {

namespace {

// f(x) = 1/2 (x-c)'A(x-c) + a sum sin(x_i); smooth with L = lambda_max(A) + a
struct TestFunction {
  Mat A;
  Vec c;
  double a = 0.0;
  double L = 0.0;

  double value(const Vec& x) const {
    const Vec r = x - c;
    return 0.5 * r.dot(A * r) + a * x.array().sin().sum();
  }
  Vec grad(const Vec& x) const { return A * (x - c) + a * x.array().cos().matrix(); }
};

Mat random_orthogonal(int n, RandomSource& rng) {
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  return qr.householderQ() * Mat::Identity(n, n);
}

Mat random_spd(int n, double lo, double hi, RandomSource& rng) {
  const Mat Q = random_orthogonal(n, rng);
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev(i) = lo + (hi - lo) * rng.uniform();
  ev(0) = hi;
  return Q * ev.asDiagonal() * Q.transpose();
}

Vec random_vec(int n, double scale, RandomSource& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

Vec random_unit(int n, RandomSource& rng) {
  Vec v = random_vec(n, 1.0, rng);
  while (v.norm() == 0) v = random_vec(n, 1.0, rng);
  return v / v.norm();
}

// A function whose gradient at x equals grad_target.
TestFunction function_with_gradient(const Vec& x, const Vec& grad_target, RandomSource& rng) {
  const int n = static_cast<int>(x.size());
  TestFunction f;
  const double Lq = 0.5 + 19.5 * rng.uniform();
  f.A = random_spd(n, 0.05 * Lq, Lq, rng);
  f.a = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(f.A, Eigen::EigenvaluesOnly);
  f.L = es.eigenvalues().maxCoeff() + f.a;
  f.c = x - f.A.ldlt().solve(grad_target - f.a * x.array().cos().matrix());
  return f;
}

struct Params {
  double gamma, theta, alpha_max, kappa_g, kappa_f;
};

Params random_params(RandomSource& rng, bool kappa_f_at_limit) {
  Params p;
  const double gammas[] = {2.0, 1.5, 3.0};
  p.gamma = gammas[rng.uniform_index(3)];
  p.theta = 0.1 + 0.8 * rng.uniform();
  p.alpha_max = 0.2 + 2.8 * rng.uniform();
  p.kappa_g = rng.bernoulli(0.1) ? 0.0 : 3.0 * rng.uniform();
  const double kf_max = p.theta / (4 * p.alpha_max);
  p.kappa_f = kappa_f_at_limit ? kf_max : kf_max * rng.uniform();
  return p;
}

double grid_step(const Params& p, RandomSource& rng) {
  return p.alpha_max * std::pow(p.gamma, -static_cast<double>(rng.uniform_index(13)));
}

// g with ||g - grad|| = s kappa_g alpha ||g||, s in [0,1] (s = 1 on boundary draws)
struct GradientPair {
  Vec g, grad;
};

GradientPair accurate_pair(int n, double alpha, double kappa_g, RandomSource& rng) {
  GradientPair gp;
  gp.g = random_vec(n, std::exp(2 * rng.normal()), rng);
  const double s = rng.bernoulli(0.1) ? 1.0 : rng.uniform();
  gp.grad = gp.g - s * kappa_g * alpha * gp.g.norm() * random_unit(n, rng);
  return gp;
}

// noise in [-r, r]; adversarial draws pick an endpoint
double estimate_noise(double r, double adversarial_sign, RandomSource& rng) {
  if (rng.bernoulli(0.25)) return adversarial_sign * r;
  return r * (2 * rng.uniform() - 1);
}

double rel_tol(double a, double b) { return 1e-10 * std::max({1.0, std::abs(a), std::abs(b)}); }

const char* const kSkip = "skip";

class Suite {
 public:
  Suite(int instances, uint64_t seed) : instances_(instances), master_(seed) {}

  void add(const std::string& name, const std::function<std::string(RandomSource&)>& one, int count = -1) {
    LemmaEntry e;
    e.name = name;
    RandomSource rng = master_.fork(name);
    const int m = count < 0 ? instances_ : count;
    // draws without a usable instance are retried, up to a fixed budget
    for (int64_t i = 0; e.instances < m && i < 20 * static_cast<int64_t>(m); ++i) {
      RandomSource r = rng.fork(static_cast<uint64_t>(i));
      std::string why;
      try {
        why = one(r);
      } catch (const std::exception& ex) {
        why = std::string("exception: ") + ex.what();
      }
      if (why == kSkip) continue;
      e.instances += 1;
      if (!why.empty()) {
        if (e.failures == 0) e.detail = fmt::format("draw {}: {}", i, why);
        e.failures += 1;
      }
    }
    if (e.instances < m) {
      e.failures += 1;
      e.detail = fmt::format("only {} usable instances of {}", e.instances, m);
    }
    report_.entries.push_back(std::move(e));
  }

  LemmaReport take() { return std::move(report_); }

 private:
  int instances_;
  RandomSource master_;
  LemmaReport report_;
};

std::string check_le(const char* what, double lhs, double rhs, double tol) {
  if (lhs <= rhs + tol) return {};
  return fmt::format("{}: {:.17g} > {:.17g}", what, lhs, rhs);
}

}  // namespace

bool LemmaReport::all_passed() const {
  for (const auto& e : entries)
    if (e.failures != 0 || e.instances == 0) return false;
  return true;
}

std::string LemmaReport::text() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << fmt::format("{:<40} {:>6} instances  {}", e.name, e.instances, e.failures == 0 ? "PASS" : "FAIL");
    if (e.failures) os << fmt::format("  ({} failures; first {})", e.failures, e.detail);
    os << "\n";
  }
  os << (all_passed() ? "all checks passed\n" : "some checks FAILED\n");
  return os.str();
}

LemmaReport lemma_suite(int instances, uint64_t seed) {
  if (instances < 1) throw ConfigError("lemma suite needs at least one instance per check");
  Suite suite(instances, seed);

  suite.add("accurate_gradient_lower_bound", [](RandomSource& rng) {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const double alpha = grid_step(p, rng);
    const GradientPair gp = accurate_pair(n, alpha, p.kappa_g, rng);
    return check_le("||grad f||", gp.grad.norm(), (p.kappa_g * p.alpha_max + 1) * gp.g.norm(),
                    1e-12 * gp.g.norm());
  });

  suite.add("inaccurate_gradient_detected", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const double kg = p.kappa_g > 0 ? p.kappa_g : 1.0;
    const double alpha = grid_step(p, rng);
    const Vec x = random_vec(n, 2.0, rng);
    const Vec g = random_vec(n, 1.0, rng);
    const Vec grad = g - (1.001 + rng.uniform()) * kg * alpha * g.norm() * random_unit(n, rng);
    const Mat A = random_spd(n, 0.1, 5.0, rng);
    const Mat C = x - A.ldlt().solve(grad);
    const auto prob = make_explicit_quadratic(A, C);
    AccuracyConfig acc;
    acc.kappa_g = kg;
    acc.kappa_f = p.kappa_f;
    const Vec xt = x - alpha * g;
    const EventFlags ev =
        classify_events(*prob, acc, x, xt, g, alpha, exact_value(*prob, x), exact_value(*prob, xt));
    if (ev.i_k) return "gradient outside the accuracy ball classified as accurate";
    if (!ev.j_k) return "exact function values classified as inaccurate";
    return {};
  });

  suite.add("accurate_estimates_imply_success", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const Vec x = random_vec(n, 2.0, rng);
    // alpha depends on L: build the function first, then move its center
    const Vec g = random_vec(n, std::exp(2 * rng.normal()), rng);
    const Vec u = random_unit(n, rng);
    const double s = rng.bernoulli(0.1) ? 1.0 : rng.uniform();
    TestFunction f = function_with_gradient(x, g, rng);  // temporary, for L
    const double thr = (1 - p.theta) / (p.kappa_g + f.L / 2 + 2 * p.kappa_f);
    const double alpha = rng.bernoulli(0.2) ? thr : thr * rng.uniform();
    if (!(alpha > 0)) return kSkip;
    const Vec grad = g - s * p.kappa_g * alpha * g.norm() * u;
    // keep A, move c so that grad f(x) = grad
    f.c = x - f.A.ldlt().solve(grad - f.a * x.array().cos().matrix());
    const double r = p.kappa_f * alpha * alpha * g.squaredNorm();
    const double f0 = f.value(x) + estimate_noise(r, -1.0, rng);
    const double fs = f.value(x - alpha * g) + estimate_noise(r, 1.0, rng);
    if (!armijo_holds(f0, fs, alpha, p.theta, -g.squaredNorm()))
      return fmt::format("unsuccessful at alpha={:.6g} <= threshold {:.6g}", alpha, thr);
    return {};
  });

  suite.add("accurate_estimates_imply_success_general", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const Vec x = random_vec(n, 2.0, rng);
    const Vec g = random_vec(n, std::exp(2 * rng.normal()), rng);
    const Vec u = random_unit(n, rng);
    const double s = rng.bernoulli(0.1) ? 1.0 : rng.uniform();
    const double k1 = 0.1 + rng.uniform(), k2 = k1 * (1 + 4 * rng.uniform());
    const DirectionProvider prov = scaled_newton_provider(random_spd(n, k1, k2, rng));
    const DescentDirection dir = prov(g);
    check_direction(dir, g);
    TestFunction f = function_with_gradient(x, g, rng);
    const double thr = dir.beta * (1 - p.theta) / (p.kappa_g + f.L * dir.kappa2 / 2 + 2 * p.kappa_f / dir.kappa1);
    const double alpha = rng.bernoulli(0.2) ? thr : thr * rng.uniform();
    if (!(alpha > 0)) return kSkip;
    const Vec grad = g - s * p.kappa_g * alpha * g.norm() * u;
    f.c = x - f.A.ldlt().solve(grad - f.a * x.array().cos().matrix());
    const double r = p.kappa_f * alpha * alpha * g.squaredNorm();
    const double f0 = f.value(x) + estimate_noise(r, -1.0, rng);
    const double fs = f.value(x + alpha * dir.d) + estimate_noise(r, 1.0, rng);
    if (!armijo_holds(f0, fs, alpha, p.theta, g.dot(dir.d)))
      return fmt::format("unsuccessful at alpha={:.6g} <= threshold {:.6g}", alpha, thr);
    return {};
  });

  // every inequality in the success argument is tight here
  suite.add("success_threshold_exact_tie", [](RandomSource&) -> std::string {
    Mat A = 4.0 * Mat::Identity(2, 2);
    const auto prob = make_explicit_quadratic(A, Mat::Zero(2, 1));
    const double kg = 1.75, kf = 0.125, theta = 0.5, alpha = 0.125;
    const double thr = (1 - theta) / (kg + 4.0 / 2 + 2 * kf);
    if (alpha != thr) return "threshold is not the constructed step";
    Vec g(2), x(2);
    g << 1.0, 0.0;
    x << 0.1953125, 0.0;
    const Vec xt = x - alpha * g;
    const double r = kf * alpha * alpha;
    const double f0 = exact_value(*prob, x) - r, fs = exact_value(*prob, xt) + r;
    AccuracyConfig acc;
    acc.kappa_g = kg;
    acc.kappa_f = kf;
    const EventFlags ev = classify_events(*prob, acc, x, xt, g, alpha, f0, fs);
    if (!ev.i_k || !ev.j_k) return "boundary estimates not classified as accurate";
    if (fs != f0 - theta * alpha * g.squaredNorm()) return "instance is not an exact tie";
    if (!armijo_holds(f0, fs, alpha, theta, -g.squaredNorm())) return "tie rejected";
    return {};
  }, 1);

  suite.add("good_estimates_imply_decrease", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, rng.bernoulli(0.2));
    const Vec x = random_vec(n, 2.0, rng);
    const Vec g = random_vec(n, std::exp(2 * rng.normal()), rng);
    const TestFunction f = function_with_gradient(x, random_vec(n, std::exp(2 * rng.normal()), rng), rng);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double alpha = grid_step(p, rng);
      const double r = p.kappa_f * alpha * alpha * g.squaredNorm();
      const double fx = f.value(x), fp = f.value(x - alpha * g);
      const double f0 = fx + estimate_noise(r, 1.0, rng);
      const double fs = fp + estimate_noise(r, -1.0, rng);
      if (!armijo_holds(f0, fs, alpha, p.theta, -g.squaredNorm())) continue;
      const double ag2 = alpha * g.squaredNorm();
      std::string why = check_le("f+ (successful)", fp, fx - p.theta * ag2 / 2, rel_tol(fx, fp));
      if (!why.empty()) return why;
      const double delta_sq = ag2 * (rng.bernoulli(0.2) ? 1.0 : rng.uniform());
      if (reliable_holds(alpha, -g.squaredNorm(), delta_sq))
        why = check_le("f+ (reliable)", fp, fx - p.theta * ag2 / 4 - p.theta * delta_sq / 4, rel_tol(fx, fp));
      return why;
    }
    return kSkip;
  });

  suite.add("gradient_growth_bound", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const Vec x = random_vec(n, 2.0, rng);
    const Vec g = random_vec(n, std::exp(rng.normal()), rng);
    const TestFunction f = function_with_gradient(x, random_vec(n, std::exp(rng.normal()), rng), rng);
    const double alpha = grid_step(p, rng);
    const double gf = f.grad(x).squaredNorm(), gp = f.grad(x - alpha * g).squaredNorm();
    const double L2 = f.L * f.L;
    std::string why = check_le("||grad f+||^2", gp, 2 * (L2 * alpha * alpha * g.squaredNorm() + gf), rel_tol(gp, gf));
    if (!why.empty()) return why;
    const double anext = std::min(p.gamma * alpha, p.alpha_max);
    const double lhs = (anext * gp - alpha * gf) / L2;
    const double rhs = 2 * p.gamma * alpha * (p.alpha_max * p.alpha_max * g.squaredNorm() + gf / L2);
    return check_le("scaled gradient change", lhs, rhs, rel_tol(anext * gp / L2, rhs));
  });

  suite.add("gradient_growth_bound_general", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, false);
    const Vec x = random_vec(n, 2.0, rng);
    const Vec g = random_vec(n, std::exp(rng.normal()), rng);
    const double k1 = 0.1 + rng.uniform(), k2 = k1 * (1 + 4 * rng.uniform());
    const DescentDirection dir = scaled_newton_provider(random_spd(n, k1, k2, rng))(g);
    const TestFunction f = function_with_gradient(x, random_vec(n, std::exp(rng.normal()), rng), rng);
    const double alpha = grid_step(p, rng);
    const double gf = f.grad(x).squaredNorm(), gp = f.grad(x + alpha * dir.d).squaredNorm();
    const double L2 = f.L * f.L, k22 = dir.kappa2 * dir.kappa2;
    std::string why =
        check_le("||grad f+||^2", gp, 2 * (L2 * alpha * alpha * k22 * g.squaredNorm() + gf), rel_tol(gp, gf));
    if (!why.empty()) return why;
    const double anext = std::min(p.gamma * alpha, p.alpha_max);
    const double lhs = (anext * gp - alpha * gf) / L2;
    const double rhs1 = 2 * p.gamma * alpha * (p.alpha_max * p.alpha_max * k22 * g.squaredNorm() + gf / L2);
    return check_le("scaled gradient change", lhs, rhs1, rel_tol(anext * gp / L2, rhs1));
  });

  suite.add("accurate_estimates_imply_decrease", [](RandomSource& rng) -> std::string {
    const int n = 1 + static_cast<int>(rng.uniform_index(8));
    const Params p = random_params(rng, rng.bernoulli(0.2));
    const Vec x = random_vec(n, 2.0, rng);
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double alpha = grid_step(p, rng);
      const GradientPair gp = accurate_pair(n, alpha, p.kappa_g, rng);
      const TestFunction f = function_with_gradient(x, gp.grad, rng);
      const Vec& g = gp.g;
      const double r = p.kappa_f * alpha * alpha * g.squaredNorm();
      const double fx = f.value(x), fp = f.value(x - alpha * g);
      const double f0 = fx + estimate_noise(r, 1.0, rng);
      const double fs = fp + estimate_noise(r, -1.0, rng);
      if (!armijo_holds(f0, fs, alpha, p.theta, -g.squaredNorm())) continue;
      const double ag2 = alpha * g.squaredNorm();
      const double t = p.kappa_g * p.alpha_max + 1;
      const double gterm = p.theta * alpha * gp.grad.squaredNorm() / (4 * t * t);
      std::string why = check_le("f+ - f (successful)", fp - fx, -p.theta * ag2 / 4 - gterm, rel_tol(fx, fp));
      if (!why.empty()) return why;
      const double delta_sq = ag2 * (rng.bernoulli(0.2) ? 1.0 : rng.uniform());
      if (reliable_holds(alpha, -g.squaredNorm(), delta_sq))
        why = check_le("f+ - f (reliable)", fp - fx, -p.theta * ag2 / 8 - p.theta * delta_sq / 8 - gterm,
                       rel_tol(fx, fp));
      return why;
    }
    return kSkip;
  });

  // consecutive states from real runs obey the transition table and stay on the step grid
  const auto transitions = [](RandomSource& rng, DirectionMode mode) -> std::string {
    ProblemSpec spec;
    spec.kind = rng.bernoulli(0.5) ? ProblemKind::logistic : ProblemKind::nonconvex_sum;
    spec.n = 2 + static_cast<int64_t>(rng.uniform_index(4));
    spec.N = 200;
    spec.seed = rng.next_u64();
    spec.noise = 1.0;
    const auto prob = make_builtin(spec);
    LineSearchConfig cfg;
    cfg.gamma = rng.bernoulli(0.5) ? 2.0 : 1.5;
    cfg.alpha_max = 1.0;
    cfg.alpha0 = cfg.alpha_max * std::pow(cfg.gamma, -static_cast<double>(rng.uniform_index(4)));
    cfg.direction_mode = mode;
    cfg.accuracy.kappa_g = 0.5 + rng.uniform();
    cfg.accuracy.kappa_f = 0.1;
    cfg.accuracy.p_g = 0.6;
    cfg.accuracy.p_f = 0.6;
    cfg.accuracy.max_batch = 50;
    cfg.sync();
    cfg.validate();
    StepContext ctx{prob.get(), &cfg, mode == DirectionMode::general ? scaled_newton_provider(Mat::Identity(spec.n, spec.n) * 0.5) : DirectionProvider{}, false};
    IterateState st = initial_state(cfg, prob->metadata().x0);
    const double dmax_sq = cfg.resolved_delta_max() * cfg.resolved_delta_max();
    for (int k = 0; k < 40; ++k) {
      const IterateState before = st;
      const StepRecord rec = step(st, ctx, rng);
      const bool moved = !(st.x.array() == before.x.array()).all();
      const double up = std::min(cfg.gamma * before.alpha, cfg.alpha_max);
      switch (rec.outcome) {
        case StepOutcome::reliable:
          if (st.alpha != up || st.delta_sq != std::min(cfg.gamma * before.delta_sq, dmax_sq))
            return fmt::format("k={} reliable transition wrong", k);
          break;
        case StepOutcome::unreliable:
          if (st.alpha != up || st.delta_sq != before.delta_sq / cfg.gamma)
            return fmt::format("k={} unreliable transition wrong", k);
          break;
        case StepOutcome::unsuccessful:
          if (moved || st.alpha != before.alpha / cfg.gamma || st.delta_sq != before.delta_sq / cfg.gamma)
            return fmt::format("k={} unsuccessful transition wrong", k);
          break;
      }
      if (rec.outcome != StepOutcome::unsuccessful && rec.gtd != 0 && !moved)
        return fmt::format("k={} successful step did not move", k);
      const double j = std::log(cfg.alpha_max / st.alpha) / std::log(cfg.gamma);
      if (std::abs(j - std::round(j)) > 1e-9 || st.alpha > cfg.alpha_max)
        return fmt::format("k={} step size {:.17g} off the grid", k, st.alpha);
    }
    return {};
  };
  suite.add("transition_table_and_grid", [&](RandomSource& rng) { return transitions(rng, DirectionMode::steepest); },
            std::max(1, instances / 20));
  suite.add("transition_table_and_grid_general",
            [&](RandomSource& rng) { return transitions(rng, DirectionMode::general); }, std::max(1, instances / 20));

  suite.add("general_mode_matches_steepest", [](RandomSource& rng) -> std::string {
    ProblemSpec spec;
    spec.kind = ProblemKind::logistic;
    spec.n = 3;
    spec.N = 300;
    spec.seed = rng.next_u64();
    const auto prob = make_builtin(spec);
    LineSearchConfig a;
    a.accuracy.p_g = 0.8;
    a.accuracy.p_f = 0.8;
    a.accuracy.max_batch = 100;
    a.accuracy.kappa_f = 0.1;
    a.sync();
    LineSearchConfig b = a;
    b.direction_mode = DirectionMode::general;
    StoppingSpec stop;
    stop.max_iters = 60;
    const uint64_t s = rng.next_u64();
    RandomSource ra(s), rb(s);
    RunOptions ro;
    ro.exact_diagnostics = false;
    const Trace ta = run(*prob, a, stop, ra, ro);
    ro.provider = steepest_provider();
    const Trace tb = run(*prob, b, stop, rb, ro);
    if (ta.records.size() != tb.records.size()) return "trace lengths differ";
    for (size_t k = 0; k < ta.records.size(); ++k) {
      const StepRecord &x = ta.records[k], &y = tb.records[k];
      if (x.outcome != y.outcome || x.alpha != y.alpha || x.delta_sq != y.delta_sq || x.g_norm != y.g_norm ||
          x.f0 != y.f0 || x.fs != y.fs || x.gtd != y.gtd)
        return fmt::format("records differ at k={}", k);
    }
    if (!(ta.summary.final_state.x.array() == tb.summary.final_state.x.array()).all()) return "final iterates differ";
    return {};
  }, std::max(1, instances / 50));

  suite.add("deterministic_reduction", [](RandomSource& rng) -> std::string {
    ProblemSpec spec;
    spec.kind = ProblemKind::quadratic_sc;
    spec.n = 2 + static_cast<int64_t>(rng.uniform_index(6));
    spec.N = 20;
    spec.seed = rng.next_u64();
    spec.noise = 0.0;
    spec.mu = 0.1;
    spec.L = 1.0 + 20 * rng.uniform();
    const auto prob = make_builtin(spec);
    const ProblemMetadata& meta = prob->metadata();
    if (meta.variance_bound_grad != 0 || meta.variance_bound_fun != 0) return "noise-free problem reports variance";
    LineSearchConfig cfg;
    cfg.theta = 0.1 + 0.8 * rng.uniform();
    cfg.accuracy.kappa_f = cfg.theta / 4;
    cfg.sync();
    StoppingSpec stop;
    stop.max_iters = 200;
    RandomSource r(rng.next_u64());
    const Trace tr = run(*prob, cfg, stop, r);
    const double floor_alpha = std::min(cfg.alpha0, (1 - cfg.theta) / (meta.lipschitz_L / 2) / cfg.gamma);
    for (size_t k = 0; k < tr.records.size(); ++k) {
      const StepRecord& rec = tr.records[k];
      if (rec.alpha < floor_alpha) return fmt::format("k={} alpha {:.6g} below {:.6g}", k, rec.alpha, floor_alpha);
      if (rec.exact && (!rec.exact->i_k || !rec.exact->j_k)) return fmt::format("k={} exact estimates flagged", k);
      if (rec.outcome != StepOutcome::unsuccessful && tr.iterates[k + 1].f > tr.iterates[k].f)
        return fmt::format("k={} successful step increased f", k);
      if (rec.outcome == StepOutcome::unsuccessful && tr.iterates[k + 1].f != tr.iterates[k].f)
        return fmt::format("k={} unsuccessful step changed f", k);
    }
    return {};
  }, std::max(1, instances / 20));

  return suite.take();
}

}  // namespace stochls

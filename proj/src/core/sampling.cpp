#include "core/sampling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/errors.hpp"

namespace stochls {
namespace {

constexpr int64_t kUnbounded = std::numeric_limits<int64_t>::max();

int64_t clamp_size(double required, int64_t max_batch) {
  if (std::isnan(required)) throw std::domain_error("sample size is NaN");
  if (!(required < static_cast<double>(max_batch))) return max_batch;
  const double c = std::ceil(required);
  return std::max<int64_t>(1, std::min<int64_t>(max_batch, static_cast<int64_t>(c)));
}

}  // namespace

void AccuracyConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("accuracy: " + m); };
  if (!(kappa_g > 0 && std::isfinite(kappa_g))) fail("kappa_g must be > 0");
  if (!(kappa_f > 0 && std::isfinite(kappa_f))) fail("kappa_f must be > 0");
  if (!(kappa_f_bar >= 0 && std::isfinite(kappa_f_bar))) fail("kappa_f_bar must be >= 0");
  if (!(p_g > 0.5 && p_g <= 1)) fail("p_g must lie in (1/2, 1]");
  if (!(p_f > 0.5 && p_f <= 1)) fail("p_f must lie in (1/2, 1]");
  if (!(theta > 0 && theta < 1)) fail("theta must lie in (0, 1)");
  if (max_batch < 0) fail("max_batch must be >= 0");
  if (!(guess_growth > 1)) fail("guess_growth must be > 1");
  if (max_guess_iterations < 1) fail("max_guess_iterations must be >= 1");
}

int64_t resolve_max_batch(const AccuracyConfig& cfg, const Problem& p) {
  return cfg.max_batch > 0 ? cfg.max_batch : p.component_count();
}

int64_t gradient_sample_size(double V_g, const AccuracyConfig& cfg, double alpha, double g_norm,
                             int64_t max_batch) {
  if (max_batch < 1) throw std::invalid_argument("max_batch must be >= 1");
  if (!(V_g >= 0) || !(alpha > 0) || !(g_norm >= 0)) throw std::invalid_argument("gradient_sample_size: bad input");
  if (V_g == 0) return 1;
  if (g_norm == 0) return max_batch;
  if (cfg.p_g >= 1) return max_batch;
  const double r = cfg.kappa_g * alpha * g_norm;
  return clamp_size(V_g / ((1.0 - cfg.p_g) * r * r), max_batch);
}

int64_t function_sample_size(double V_f, const AccuracyConfig& cfg, double alpha, double g_norm, double delta,
                             int64_t max_batch) {
  if (max_batch < 1) throw std::invalid_argument("max_batch must be >= 1");
  if (!(V_f >= 0) || !(alpha > 0) || !(g_norm >= 0) || !(delta > 0))
    throw std::invalid_argument("function_sample_size: bad input");
  if (V_f == 0) return 1;
  if (cfg.p_f >= 1) return max_batch;
  double req = 0.0;
  if (g_norm > 0) {
    const double r = cfg.kappa_f * alpha * alpha * g_norm * g_norm;
    req = V_f / ((1.0 - cfg.p_f) * r * r);
  }
  const double d2 = delta * delta;
  req = std::max(req, V_f / (cfg.theta * cfg.theta * d2 * d2));
  return clamp_size(req, max_batch);
}

SampleBatch draw_sized_batch(int64_t N, int64_t required, int64_t max_batch, RandomSource& rng, bool& capped) {
  const int64_t cap = std::min(max_batch, N);
  capped = required > cap;
  if (std::min(required, max_batch) >= N) return exhaustive_batch(N);
  return draw_batch(N, std::min(required, max_batch), rng);
}

GradientEstimate estimate_gradient(const Problem& p, const Vec& x, double alpha, const AccuracyConfig& cfg,
                                   RandomSource& rng, double g_norm_guess) {
  const int64_t N = p.component_count();
  const int64_t max_batch = resolve_max_batch(cfg, p);
  const double V_g = p.metadata().variance_bound_grad;
  GradientEstimate est;
  est.alpha = alpha;
  est.kappa_g = cfg.kappa_g;

  int64_t size = gradient_sample_size(V_g, cfg, alpha, g_norm_guess, max_batch);
  SampleBatch batch;
  Vec sum = Vec::Zero(p.dimension());
  for (int it = 1;; ++it) {
    est.guess_iterations = it;
    bool capped = false;
    if (std::min(size, max_batch) >= N) {
      batch = exhaustive_batch(N);
      sum.setZero();
      p.sum_gradients(x, batch.indices, sum);
      capped = size > std::min(max_batch, N);
    } else {
      // reuse the draws already made and only add the missing ones
      const int64_t target = std::min(size, max_batch);
      const int64_t have = batch.size();
      if (target > have) {
        SampleBatch extra;
        extend_batch(extra, N, target - have, rng);
        p.sum_gradients(x, extra.indices, sum);
        batch.indices.insert(batch.indices.end(), extra.indices.begin(), extra.indices.end());
      }
      capped = size > max_batch;
    }
    est.g = sum / static_cast<double>(batch.size());
    est.batch_size = batch.size();
    est.exhaustive = batch.exhaustive;
    est.capped = capped;
    const double gn = est.g.norm();
    if (!std::isfinite(gn)) throw NumericalAbort("non-finite gradient estimate");
    const int64_t needed = gradient_sample_size(V_g, cfg, alpha, gn, max_batch);
    if (batch.size() >= needed || batch.exhaustive || batch.size() >= max_batch ||
        it >= cfg.max_guess_iterations) {
      est.capped = gradient_sample_size(V_g, cfg, alpha, gn, kUnbounded) > std::min(max_batch, N);
      break;
    }
    const double grown = std::ceil(static_cast<double>(batch.size()) * cfg.guess_growth);
    size = std::max<int64_t>(needed, grown >= 9e18 ? max_batch : static_cast<int64_t>(grown));
  }
  est.accuracy_radius = cfg.kappa_g * alpha * est.g.norm();
  return est;
}

FunctionEstimatePair estimate_function_pair(const Problem& p, const Vec& x, const Vec& x_trial, double alpha,
                                            double g_norm, double delta, const AccuracyConfig& cfg,
                                            RandomSource& rng) {
  const int64_t N = p.component_count();
  const int64_t max_batch = resolve_max_batch(cfg, p);
  const int64_t size = function_sample_size(p.metadata().variance_bound_fun, cfg, alpha, g_norm, delta, kUnbounded);
  RandomSource r0 = rng.fork("f0");
  RandomSource rs = rng.fork("fs");
  bool c0 = false, cs = false;
  const SampleBatch b0 = draw_sized_batch(N, size, max_batch, r0, c0);
  const SampleBatch bs = draw_sized_batch(N, size, max_batch, rs, cs);
  FunctionEstimatePair out;
  out.f0 = p.sum_values(x, b0.indices) / static_cast<double>(b0.size());
  out.fs = p.sum_values(x_trial, bs.indices) / static_cast<double>(bs.size());
  out.batch_size_0 = b0.size();
  out.batch_size_s = bs.size();
  out.capped = c0 || cs;
  out.exhaustive = b0.exhaustive && bs.exhaustive;
  const double g2 = g_norm * g_norm;
  out.accuracy_radius = cfg.kappa_f * alpha * alpha * g2;
  const double d2 = delta * delta;
  out.variance_cap = std::max(cfg.kappa_f_bar * cfg.kappa_f_bar * alpha * alpha * g2 * g2,
                              cfg.theta * cfg.theta * d2 * d2);
  return out;
}

bool gradient_accurate(const Vec& g, const Vec& grad_exact, double alpha, double kappa_g) {
  return (g - grad_exact).norm() <= kappa_g * alpha * g.norm();
}

bool function_pair_accurate(double f0, double fs, double f_exact, double fs_exact, double alpha, double g_norm,
                            double kappa_f) {
  const double r = kappa_f * alpha * alpha * g_norm * g_norm;
  return std::abs(f0 - f_exact) <= r && std::abs(fs - fs_exact) <= r;
}

}  // namespace stochls

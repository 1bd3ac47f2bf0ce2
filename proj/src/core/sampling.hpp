#pragma once

#include <cstdint>

#include "core/oracle.hpp"
#include "core/rng.hpp"

namespace stochls {

struct AccuracyConfig {
  double kappa_g = 2.0;
  double kappa_f = 0.125;
  double kappa_f_bar = 0.0;
  double p_g = 16.0 / 17.0;
  double p_f = 0.9;
  double theta = 0.5;
  // 0 means "use the number of components"
  int64_t max_batch = 0;
  double guess_growth = 2.0;
  int max_guess_iterations = 64;

  void validate() const;
};

struct GradientEstimate {
  Vec g;
  int64_t batch_size = 0;
  double alpha = 0.0;
  double kappa_g = 0.0;
  double accuracy_radius = 0.0;  // kappa_g * alpha * ||g||
  int guess_iterations = 0;
  bool capped = false;
  bool exhaustive = false;
};

struct FunctionEstimatePair {
  double f0 = 0.0;
  double fs = 0.0;
  int64_t batch_size_0 = 0;
  int64_t batch_size_s = 0;
  double accuracy_radius = 0.0;  // kappa_f * alpha^2 * ||g||^2
  double variance_cap = 0.0;     // max{kappa_f_bar^2 alpha^2 ||g||^4, theta^2 delta^4}
  bool capped = false;
  bool exhaustive = false;
};

int64_t gradient_sample_size(double V_g, const AccuracyConfig& cfg, double alpha, double g_norm,
                             int64_t max_batch);
int64_t function_sample_size(double V_f, const AccuracyConfig& cfg, double alpha, double g_norm, double delta,
                             int64_t max_batch);

// Draws a batch of `required` samples, or an exhaustive pass when that covers the data.
SampleBatch draw_sized_batch(int64_t N, int64_t required, int64_t max_batch, RandomSource& rng,
                             bool& capped);

GradientEstimate estimate_gradient(const Problem& p, const Vec& x, double alpha, const AccuracyConfig& cfg,
                                   RandomSource& rng, double g_norm_guess = 1.0);

FunctionEstimatePair estimate_function_pair(const Problem& p, const Vec& x, const Vec& x_trial, double alpha,
                                            double g_norm, double delta, const AccuracyConfig& cfg,
                                            RandomSource& rng);

// accuracy events against the exact oracle
bool gradient_accurate(const Vec& g, const Vec& grad_exact, double alpha, double kappa_g);
bool function_pair_accurate(double f0, double fs, double f_exact, double fs_exact, double alpha, double g_norm,
                            double kappa_f);

int64_t resolve_max_batch(const AccuracyConfig& cfg, const Problem& p);

}  // namespace stochls

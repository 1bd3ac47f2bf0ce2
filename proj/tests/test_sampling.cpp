#include "doctest.h"

#include <cmath>

#include "core/oracle.hpp"
#include "core/sampling.hpp"
#include "test_support.hpp"

using namespace stochls;

TEST_CASE("gradient sample size closed form") {
  AccuracyConfig c;
  c.kappa_g = 2.0;
  c.p_g = 16.0 / 17.0;
  // 1 / ((1/17) * 4) = 4.25
  CHECK(gradient_sample_size(1.0, c, 1.0, 1.0, 1000000) == 5);
  c.p_g = 1.0;
  CHECK(gradient_sample_size(1.0, c, 1.0, 1.0, 777) == 777);
  c.p_g = 1.0 - 1e-15;
  CHECK(gradient_sample_size(1.0, c, 1.0, 1.0, 777) == 777);
}

TEST_CASE("gradient sample size scaling") {
  AccuracyConfig c;
  c.kappa_g = 1.0;
  c.p_g = 0.75;
  CHECK(gradient_sample_size(1.0, c, 1.0, 1.0, 1 << 20) == 4);
  CHECK(gradient_sample_size(1.0, c, 0.5, 1.0, 1 << 20) == 16);
  CHECK(gradient_sample_size(1.0, c, 1.0, 0.0, 99) == 99);
  CHECK(gradient_sample_size(0.0, c, 1.0, 1.0, 99) == 1);
}

TEST_CASE("gradient sample size monotonicity") {
  RandomSource rng(1);
  const int64_t cap = int64_t{1} << 40;
  for (int t = 0; t < 100; ++t) {
    AccuracyConfig c;
    c.kappa_g = 0.1 + 3 * rng.uniform();
    c.p_g = 0.55 + 0.4 * rng.uniform();
    const double V = 0.1 + 10 * rng.uniform(), a = 0.01 + rng.uniform(), g = 0.01 + rng.uniform();
    const int64_t base = gradient_sample_size(V, c, a, g, cap);
    AccuracyConfig hi = c;
    hi.p_g = std::min(1.0, c.p_g + 0.04);
    CHECK(gradient_sample_size(V, hi, a, g, cap) >= base);
    CHECK(gradient_sample_size(V, c, 2 * a, g, cap) <= base);
    CHECK(gradient_sample_size(V, c, a, 2 * g, cap) <= base);
    AccuracyConfig kg = c;
    kg.kappa_g *= 2;
    CHECK(gradient_sample_size(V, kg, a, g, cap) <= base);
  }
}

TEST_CASE("function sample size closed form") {
  AccuracyConfig c;
  c.kappa_f = 0.125;
  c.p_f = 0.9;
  c.theta = 0.5;
  CHECK(function_sample_size(0.0, c, 1.0, 1.0, 1.0, 1000) == 1);
  // accuracy term 1/(0.1 * 0.015625 * 1e4) = 0.064; variance term 1/(0.25 * 1) = 4
  CHECK(function_sample_size(1.0, c, 1.0, 10.0, 1.0, 1000) == 4);
  CHECK(function_sample_size(1.0, c, 1.0, 10.0, 0.5, 1000) == 64);
  CHECK(function_sample_size(1.0, c, 1.0, 0.0, 1.0, 1000) == 4);
  // accuracy term dominates: 1/(0.125 * 0.015625 * 1) = 512
  AccuracyConfig c8 = c;
  c8.p_f = 0.875;
  CHECK(function_sample_size(1.0, c8, 1.0, 1.0, 1.0, 100000) == 512);
  CHECK(function_sample_size(1.0, c, 1.0, 1.0, 1.0, 100) == 100);
}

TEST_CASE("zero variance collapses to single exact samples") {
  ProblemSpec s;
  s.kind = ProblemKind::quadratic_sc;
  s.n = 4;
  s.N = 50;
  s.noise = 0.0;
  const auto p = make_builtin(s);
  REQUIRE(p->metadata().variance_bound_grad == 0.0);
  REQUIRE(p->metadata().variance_bound_fun == 0.0);
  AccuracyConfig c;
  RandomSource rng(4);
  const Vec x = testing::vec({0.3, -1, 2, 0.5});
  const GradientEstimate g = estimate_gradient(*p, x, 1.0, c, rng);
  CHECK(g.batch_size == 1);
  CHECK(g.guess_iterations == 1);
  CHECK((g.g - exact_gradient(*p, x)).norm() <= 1e-14 * g.g.norm());
  CHECK(g.accuracy_radius == c.kappa_g * 1.0 * g.g.norm());
  const Vec xt = x - g.g;
  const FunctionEstimatePair f = estimate_function_pair(*p, x, xt, 1.0, g.g.norm(), 1.0, c, rng);
  CHECK(f.batch_size_0 == 1);
  CHECK(f.batch_size_s == 1);
  CHECK(f.f0 == doctest::Approx(exact_value(*p, x)).epsilon(1e-14));
  CHECK(f.fs == doctest::Approx(exact_value(*p, xt)).epsilon(1e-14));
}

TEST_CASE("tiny step sizes hit the batch cap") {
  const auto p = make_builtin(ProblemKind::quadratic_sc, 4, 300, 2);
  AccuracyConfig c;
  RandomSource rng(5);
  const GradientEstimate g = estimate_gradient(*p, p->metadata().x0, 1e-6, c, rng);
  CHECK(g.capped);
  CHECK(g.batch_size == 300);
  CHECK(g.exhaustive);
  CHECK((g.g - exact_gradient(*p, p->metadata().x0)).norm() <= 1e-12 * g.g.norm());
  AccuracyConfig capped = c;
  capped.max_batch = 40;
  const GradientEstimate h = estimate_gradient(*p, p->metadata().x0, 1e-6, capped, rng);
  CHECK(h.capped);
  CHECK(h.batch_size == 40);
  CHECK_FALSE(h.exhaustive);
}

TEST_CASE("accepted gradient batches meet the size rule") {
  const auto p = make_builtin(ProblemKind::synthetic_gaussian, 5, 100000, 3);
  AccuracyConfig c;
  c.p_g = 0.8;
  RandomSource rng(6);
  for (int t = 0; t < 200; ++t) {
    const double alpha = std::pow(2.0, -static_cast<double>(t % 4));
    const GradientEstimate g = estimate_gradient(*p, p->metadata().x0, alpha, c, rng, 0.1 + rng.uniform() * 10);
    if (g.capped) continue;
    CHECK(g.batch_size >=
          gradient_sample_size(p->metadata().variance_bound_grad, c, alpha, g.g.norm(), 100000));
  }
}

TEST_CASE("function estimates at the same point are unbiased in difference") {
  ProblemSpec s;
  s.kind = ProblemKind::synthetic_gaussian;
  s.n = 3;
  s.N = 100000;
  s.fun_noise_var = 4.0;
  const auto p = make_builtin(s);
  AccuracyConfig c;
  c.p_f = 0.6;
  const Vec x = p->metadata().x0;
  RandomSource rng(7);
  double sum = 0;
  int64_t batch = 0;
  const int reps = 10000;
  for (int t = 0; t < reps; ++t) {
    RandomSource r = rng.fork(static_cast<uint64_t>(t));
    const FunctionEstimatePair f = estimate_function_pair(*p, x, x, 1.0, 3.0, 2.0, c, r);
    sum += f.f0 - f.fs;
    batch = f.batch_size_0;
    REQUIRE(f.batch_size_0 == f.batch_size_s);
  }
  REQUIRE(batch > 1);
  REQUIRE(batch < 100000);
  CHECK(std::abs(sum / reps) <=
        4 * std::sqrt(2 * p->metadata().variance_bound_fun / (static_cast<double>(batch) * reps)));
}

TEST_CASE("full-batch function estimates are exact") {
  const auto p = make_builtin(ProblemKind::logistic, 3, 40, 1);
  AccuracyConfig c;
  c.p_f = 0.99;
  RandomSource rng(8);
  const Vec x = testing::vec({0.5, 0.5, -0.5});
  const FunctionEstimatePair f = estimate_function_pair(*p, x, 0.5 * x, 0.01, 0.1, 1e-3, c, rng);
  CHECK(f.exhaustive);
  CHECK(f.f0 == doctest::Approx(exact_value(*p, x)).epsilon(1e-14));
  CHECK(f.accuracy_radius == c.kappa_f * 0.01 * 0.01 * 0.1 * 0.1);
}

TEST_CASE("accuracy events at their boundaries") {
  const Vec g = testing::vec({1.0, 0.0});
  CHECK(gradient_accurate(g, testing::vec({0.75, 0.0}), 0.125, 2.0));   // 0.25 <= 0.25
  CHECK_FALSE(gradient_accurate(g, testing::vec({0.7, 0.0}), 0.125, 2.0));
  CHECK(function_pair_accurate(1.0 + 0.125 * 0.25, 2.0, 1.0, 2.0, 0.5, 1.0, 0.125));
  CHECK_FALSE(function_pair_accurate(1.0, 2.1, 1.0, 2.0, 0.5, 1.0, 0.125));
}

TEST_CASE("accuracy config validation") {
  AccuracyConfig c;
  CHECK_NOTHROW(c.validate());
  c.p_g = 0.5;
  CHECK_THROWS(c.validate());
  c = AccuracyConfig{};
  c.kappa_g = 0;
  CHECK_THROWS(c.validate());
  c = AccuracyConfig{};
  c.guess_growth = 1.0;
  CHECK_THROWS(c.validate());
}

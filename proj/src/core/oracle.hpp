#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace stochls {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ConvexityClass { nonconvex, convex, strongly_convex };

const char* to_string(ConvexityClass c);

struct ProblemMetadata {
  double lipschitz_L = 0.0;
  double f_min = 0.0;
  // bound on E||grad f_i(x) - grad f(x)||^2 over the certification region
  double variance_bound_grad = 0.0;
  // bound on E(f_i(x) - f(x))^2 over the certification region
  double variance_bound_fun = 0.0;
  ConvexityClass convexity = ConvexityClass::nonconvex;
  double strong_convexity_mu = 0.0;
  std::optional<double> grad_bound_Lf;
  std::optional<double> domain_diameter_D;
  std::optional<double> f_star;
  // certification region: ball of this radius around region_center
  Vec region_center;
  double region_radius = 0.0;
  Vec x0;

  void validate(int64_t dimension) const;
  bool in_region(const Vec& x) const;
};

// Multiset of component indices. An exhaustive batch holds every index once.
struct SampleBatch {
  std::vector<int64_t> indices;
  bool exhaustive = false;

  int64_t size() const { return static_cast<int64_t>(indices.size()); }
};

// Finite-sum objective f(x) = (1/N) sum_i f_i(x).
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string kind() const = 0;
  virtual int64_t dimension() const = 0;
  virtual int64_t component_count() const = 0;
  virtual const ProblemMetadata& metadata() const = 0;

  virtual double component_value(int64_t i, const Vec& x) const = 0;
  // acc += grad f_i(x)
  virtual void add_component_gradient(int64_t i, const Vec& x, Vec& acc) const = 0;

  // sums over a multiset; override for speed
  virtual double sum_values(const Vec& x, std::span<const int64_t> idx) const;
  virtual void sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const;
};

double exact_value(const Problem& p, const Vec& x);
Vec exact_gradient(const Problem& p, const Vec& x);
double sample_value(const Problem& p, const Vec& x, const SampleBatch& batch);
Vec sample_gradient(const Problem& p, const Vec& x, const SampleBatch& batch);

SampleBatch exhaustive_batch(int64_t N);
// i.i.d. uniform draws with replacement
SampleBatch draw_batch(int64_t N, int64_t size, RandomSource& rng);
// appends draws to an existing batch
void extend_batch(SampleBatch& batch, int64_t N, int64_t extra, RandomSource& rng);

enum class ProblemKind { quadratic_sc, logistic, nonconvex_sum, synthetic_gaussian };

const char* to_string(ProblemKind k);
ProblemKind parse_problem_kind(const std::string& s);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::quadratic_sc;
  int64_t n = 10;
  int64_t N = 1000;
  uint64_t seed = 0;

  // spread of the per-component data (centers, offsets); 0 gives a deterministic oracle
  double noise = 1.0;

  // quadratic_sc spectrum
  double mu = 1.0;
  double L = 10.0;

  // logistic
  double reg = 1e-2;
  double margin = 0.0;  // > 0 builds separable data with exactly this margin
  double label_noise = 0.1;

  // nonconvex_sum confining wall radius
  double wall_radius = 2000.0;

  // synthetic_gaussian noise levels
  double grad_noise_var = 1.0;
  double fun_noise_var = 4.0;

  // <= 0 picks the per-kind default
  double region_radius = 0.0;
};

std::shared_ptr<const Problem> make_builtin(const ProblemSpec& spec);
std::shared_ptr<const Problem> make_builtin(ProblemKind kind, int64_t n, int64_t N, uint64_t seed);

// f_i(x) = 1/2 (x - c_i)' A (x - c_i) with the columns of `centers` as c_i; A symmetric positive definite.
std::shared_ptr<const Problem> make_explicit_quadratic(const Mat& A, const Mat& centers, double region_radius = 0.0);

}  // namespace stochls

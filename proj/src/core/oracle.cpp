#include "core/oracle.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "core/errors.hpp"

namespace stochls {

const char* to_string(ConvexityClass c) {
  switch (c) {
    case ConvexityClass::nonconvex: return "nonconvex";
    case ConvexityClass::convex: return "convex";
    case ConvexityClass::strongly_convex: return "strongly_convex";
  }
  return "?";
}

const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::quadratic_sc: return "quadratic_sc";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::nonconvex_sum: return "nonconvex_sum";
    case ProblemKind::synthetic_gaussian: return "synthetic_gaussian";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "quadratic_sc") return ProblemKind::quadratic_sc;
  if (s == "logistic") return ProblemKind::logistic;
  if (s == "nonconvex_sum") return ProblemKind::nonconvex_sum;
  if (s == "synthetic_gaussian") return ProblemKind::synthetic_gaussian;
  throw ConfigError("unknown problem kind '" + s + "'");
}

void ProblemMetadata::validate(int64_t dimension) const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("metadata: " + m); };
  if (!(std::isfinite(lipschitz_L) && lipschitz_L > 0)) fail("lipschitz_L must be finite and > 0");
  if (!std::isfinite(f_min)) fail("f_min must be finite");
  if (!(std::isfinite(variance_bound_grad) && variance_bound_grad >= 0)) fail("variance_bound_grad must be >= 0");
  if (!(std::isfinite(variance_bound_fun) && variance_bound_fun >= 0)) fail("variance_bound_fun must be >= 0");
  const bool sc = convexity == ConvexityClass::strongly_convex;
  if (sc != (strong_convexity_mu > 0)) fail("strong_convexity_mu > 0 exactly when strongly convex");
  if (sc && strong_convexity_mu > lipschitz_L) fail("strong_convexity_mu exceeds lipschitz_L");
  if (f_star) {
    const double slack = 1e-12 * std::max(1.0, std::abs(*f_star));
    if (*f_star < f_min - slack) fail("f_star below f_min");
  }
  if (grad_bound_Lf && !(*grad_bound_Lf >= 0)) fail("grad_bound_Lf must be >= 0");
  if (domain_diameter_D && !(*domain_diameter_D >= 0)) fail("domain_diameter_D must be >= 0");
  if (region_center.size() != dimension) fail("region_center has wrong dimension");
  if (!(region_radius > 0)) fail("region_radius must be > 0");
  if (x0.size() != dimension) fail("x0 has wrong dimension");
}

bool ProblemMetadata::in_region(const Vec& x) const {
  return (x - region_center).norm() <= region_radius;
}

double Problem::sum_values(const Vec& x, std::span<const int64_t> idx) const {
  double s = 0.0;
  for (int64_t i : idx) s += component_value(i, x);
  return s;
}

void Problem::sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const {
  for (int64_t i : idx) add_component_gradient(i, x, acc);
}

SampleBatch exhaustive_batch(int64_t N) {
  SampleBatch b;
  b.indices.resize(static_cast<size_t>(N));
  std::iota(b.indices.begin(), b.indices.end(), int64_t{0});
  b.exhaustive = true;
  return b;
}

SampleBatch draw_batch(int64_t N, int64_t size, RandomSource& rng) {
  if (size < 1) throw std::invalid_argument("draw_batch: size must be >= 1");
  SampleBatch b;
  extend_batch(b, N, size, rng);
  return b;
}

void extend_batch(SampleBatch& batch, int64_t N, int64_t extra, RandomSource& rng) {
  if (N < 1) throw std::invalid_argument("extend_batch: N must be >= 1");
  batch.indices.reserve(batch.indices.size() + static_cast<size_t>(extra));
  for (int64_t j = 0; j < extra; ++j) batch.indices.push_back(rng.uniform_index(N));
}

namespace {

void check_x(const Problem& p, const Vec& x) {
  if (x.size() != p.dimension())
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(p.dimension()));
  if (!x.allFinite()) throw std::domain_error("point has non-finite entries");
}

void check_batch(const Problem& p, const SampleBatch& b) {
  if (b.indices.empty()) throw std::invalid_argument("empty sample batch");
  const int64_t N = p.component_count();
  for (int64_t i : b.indices)
    if (i < 0 || i >= N) throw std::invalid_argument("sample index out of range");
}

}  // namespace

double exact_value(const Problem& p, const Vec& x) {
  check_x(p, x);
  const SampleBatch all = exhaustive_batch(p.component_count());
  return p.sum_values(x, all.indices) / static_cast<double>(all.size());
}

Vec exact_gradient(const Problem& p, const Vec& x) {
  check_x(p, x);
  const SampleBatch all = exhaustive_batch(p.component_count());
  Vec acc = Vec::Zero(p.dimension());
  p.sum_gradients(x, all.indices, acc);
  return acc / static_cast<double>(all.size());
}

double sample_value(const Problem& p, const Vec& x, const SampleBatch& batch) {
  check_x(p, x);
  check_batch(p, batch);
  return p.sum_values(x, batch.indices) / static_cast<double>(batch.size());
}

Vec sample_gradient(const Problem& p, const Vec& x, const SampleBatch& batch) {
  check_x(p, x);
  check_batch(p, batch);
  Vec acc = Vec::Zero(p.dimension());
  p.sum_gradients(x, batch.indices, acc);
  return acc / static_cast<double>(batch.size());
}

}  // namespace stochls

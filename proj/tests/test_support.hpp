#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "core/oracle.hpp"
#include "core/rng.hpp"

namespace testing {

using stochls::Mat;
using stochls::Vec;

// Components with fixed values and zero gradients; optionally NaN everywhere.
class TableProblem final : public stochls::Problem {
 public:
  TableProblem(std::vector<double> values, int64_t n, bool nan_values = false)
      : values_(std::move(values)), n_(n), nan_(nan_values) {
    meta_.lipschitz_L = 1.0;
    meta_.x0 = Vec::Zero(n);
    meta_.region_center = Vec::Zero(n);
    meta_.region_radius = 1.0;
  }
  std::string kind() const override { return "table"; }
  int64_t dimension() const override { return n_; }
  int64_t component_count() const override { return static_cast<int64_t>(values_.size()); }
  const stochls::ProblemMetadata& metadata() const override { return meta_; }
  double component_value(int64_t i, const Vec&) const override {
    return nan_ ? std::nan("") : values_[static_cast<size_t>(i)];
  }
  void add_component_gradient(int64_t, const Vec& x, Vec& acc) const override {
    if (nan_) acc.array() += std::nan("");
    else acc += x;
  }

 private:
  std::vector<double> values_;
  int64_t n_;
  bool nan_;
  stochls::ProblemMetadata meta_;
};

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

inline Vec random_vector(int64_t n, double scale, stochls::RandomSource& rng) {
  Vec v(n);
  for (int64_t i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

// uniform point in a ball
inline Vec random_in_ball(const Vec& center, double radius, stochls::RandomSource& rng) {
  const int64_t n = center.size();
  Vec d = random_vector(n, 1.0, rng);
  d.normalize();
  return center + radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) * d;
}

inline Mat spd_with_spectrum(const Vec& eig, stochls::RandomSource& rng) {
  const int64_t n = eig.size();
  Mat G(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  Mat A = Q * eig.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

// lower end of the Wilson score interval
inline double wilson_lower(double successes, double trials, double z) {
  const double ph = successes / trials;
  const double z2 = z * z;
  const double centre = ph + z2 / (2 * trials);
  const double half = z * std::sqrt(ph * (1 - ph) / trials + z2 / (4 * trials * trials));
  return (centre - half) / (1 + z2 / trials);
}

}  // namespace testing

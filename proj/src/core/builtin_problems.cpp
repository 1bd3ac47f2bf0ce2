#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/oracle.hpp"

namespace stochls {
namespace {

Mat gaussian_matrix(int64_t rows, int64_t cols, double scale, RandomSource& rng) {
  Mat m(rows, cols);
  for (int64_t j = 0; j < cols; ++j)
    for (int64_t i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

// Subtract the column mean so the data is exactly centred.
void center_columns(Mat& m) {
  const Vec mean = m.rowwise().mean();
  m.colwise() -= mean;
}

double mean_sq_col_norm(const Mat& m) { return m.colwise().squaredNorm().mean(); }

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// f_i(x) = 1/2 (x - c_i)' A (x - c_i)
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(const Mat& A, const Mat& C, double mu, double L, const Vec& x0, double region_radius)
      : n_(A.rows()), N_(C.cols()), A_(0.5 * (A + A.transpose())) {
    if (!(mu > 0 && L >= mu)) throw std::invalid_argument("quadratic: need 0 < mu <= L");
    AC_ = A_ * C;
    q_.resize(N_);
    for (int64_t i = 0; i < N_; ++i) q_(i) = 0.5 * C.col(i).dot(AC_.col(i));

    meta_.lipschitz_L = L;
    meta_.strong_convexity_mu = mu;
    meta_.convexity = ConvexityClass::strongly_convex;
    // minimiser is the mean centre
    const Vec xstar = C.rowwise().mean();
    meta_.f_star = exact_value(*this, xstar);
    meta_.f_min = std::min(0.0, *meta_.f_star);
    meta_.x0 = x0;
    meta_.region_center = xstar;
    meta_.region_radius = region_radius > 0 ? region_radius : 2.0 * std::max(1.0, (x0 - xstar).norm());
    // gradient noise is x-independent: A (c_i - mean c)
    const Vec acbar = AC_.rowwise().mean();
    meta_.variance_bound_grad = (AC_.colwise() - acbar).colwise().squaredNorm().mean();
    // f_i - f = -(x - xstar)'A(c_i - xstar) + const_i
    Vec r(N_);
    for (int64_t i = 0; i < N_; ++i) {
      const Vec ci = C.col(i) - xstar;
      r(i) = 0.5 * ci.dot(A_ * ci);
    }
    const double r_sd = std::sqrt((r.array() - r.mean()).square().mean());
    const double vf = meta_.region_radius * std::sqrt(meta_.variance_bound_grad) + r_sd;
    meta_.variance_bound_fun = vf * vf;
    meta_.grad_bound_Lf = L * meta_.region_radius;
    meta_.domain_diameter_D = meta_.region_radius;
    meta_.validate(n_);
  }

  std::string kind() const override { return "quadratic_sc"; }
  int64_t dimension() const override { return n_; }
  int64_t component_count() const override { return N_; }
  const ProblemMetadata& metadata() const override { return meta_; }

  double component_value(int64_t i, const Vec& x) const override {
    return 0.5 * x.dot(A_ * x) - x.dot(AC_.col(i)) + q_(i);
  }
  void add_component_gradient(int64_t i, const Vec& x, Vec& acc) const override {
    acc += A_ * x - AC_.col(i);
  }
  double sum_values(const Vec& x, std::span<const int64_t> idx) const override {
    const double base = 0.5 * x.dot(A_ * x);
    double s = 0.0;
    for (int64_t i : idx) s += base - x.dot(AC_.col(i)) + q_(i);
    return s;
  }
  void sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const override {
    Vec sc = Vec::Zero(n_);
    for (int64_t i : idx) sc += AC_.col(i);
    acc += static_cast<double>(idx.size()) * (A_ * x) - sc;
  }

  const Mat& hessian() const { return A_; }

 private:
  int64_t n_, N_;
  Mat A_, AC_;
  Vec q_;
  ProblemMetadata meta_;
};

// f_i(x) = log(1 + exp(-b_i a_i'x)) + reg/2 ||x||^2
class LogisticProblem final : public Problem {
 public:
  explicit LogisticProblem(const ProblemSpec& s) : n_(s.n), N_(s.N), reg_(s.reg) {
    if (s.reg < 0) throw std::invalid_argument("logistic: reg must be >= 0");
    if (s.margin < 0) throw std::invalid_argument("logistic: margin must be >= 0");
    if (!(s.label_noise >= 0 && s.label_noise < 0.5))
      throw std::invalid_argument("logistic: label_noise must be in [0, 0.5)");
    RandomSource rng = RandomSource(s.seed).fork("logistic");
    RandomSource rw = rng.fork("planted");
    Vec w(n_);
    for (int64_t j = 0; j < n_; ++j) w(j) = rw.normal();
    w.normalize();
    RandomSource rd = rng.fork("features");
    RandomSource rl = rng.fork("labels");
    A_.resize(n_, N_);
    b_.resize(N_);
    for (int64_t i = 0; i < N_; ++i) {
      Vec z(n_);
      for (int64_t j = 0; j < n_; ++j) z(j) = rd.normal();
      if (s.margin > 0) {
        const double bi = rl.bernoulli(0.5) ? 1.0 : -1.0;
        A_.col(i) = z - z.dot(w) * w + bi * s.margin * w;
        b_(i) = bi;
      } else {
        A_.col(i) = z;
        double bi = z.dot(w) >= 0 ? 1.0 : -1.0;
        if (rl.bernoulli(s.label_noise)) bi = -bi;
        b_(i) = bi;
      }
    }

    const Mat gram = A_ * A_.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    meta_.lipschitz_L = es.eigenvalues().maxCoeff() / (4.0 * static_cast<double>(N_)) + reg_;
    meta_.f_min = 0.0;
    if (reg_ > 0) {
      meta_.convexity = ConvexityClass::strongly_convex;
      meta_.strong_convexity_mu = reg_;
    } else {
      meta_.convexity = ConvexityClass::convex;
    }
    meta_.x0 = Vec::Zero(n_);
    meta_.region_center = Vec::Zero(n_);
    meta_.region_radius = s.region_radius > 0 ? s.region_radius : 25.0;
    const double R = meta_.region_radius;
    meta_.variance_bound_grad = mean_sq_col_norm(A_);
    const Vec norms = A_.colwise().norm();
    meta_.variance_bound_fun = (std::log(2.0) + norms.array() * R).square().mean();
    meta_.grad_bound_Lf = norms.mean() + reg_ * R;

    if (s.margin > 0 && reg_ == 0) {
      // infimum approached along the planted direction
      meta_.f_star = 0.0;
    } else if (auto xs = newton_minimise()) {
      meta_.f_star = std::max(0.0, exact_value(*this, *xs));
      meta_.domain_diameter_D = R + xs->norm();
    }
    meta_.validate(n_);
  }

  std::string kind() const override { return "logistic"; }
  int64_t dimension() const override { return n_; }
  int64_t component_count() const override { return N_; }
  const ProblemMetadata& metadata() const override { return meta_; }

  double component_value(int64_t i, const Vec& x) const override {
    return softplus(-b_(i) * A_.col(i).dot(x)) + 0.5 * reg_ * x.squaredNorm();
  }
  void add_component_gradient(int64_t i, const Vec& x, Vec& acc) const override {
    const double m = b_(i) * A_.col(i).dot(x);
    const double s = 1.0 / (1.0 + std::exp(m));
    acc += (-b_(i) * s) * A_.col(i) + reg_ * x;
  }
  double sum_values(const Vec& x, std::span<const int64_t> idx) const override {
    const double r = 0.5 * reg_ * x.squaredNorm();
    double s = 0.0;
    for (int64_t i : idx) s += softplus(-b_(i) * A_.col(i).dot(x)) + r;
    return s;
  }
  void sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const override {
    Vec g = Vec::Zero(n_);
    for (int64_t i : idx) {
      const double m = b_(i) * A_.col(i).dot(x);
      g -= (b_(i) / (1.0 + std::exp(m))) * A_.col(i);
    }
    acc += g + (static_cast<double>(idx.size()) * reg_) * x;
  }

 private:
  std::optional<Vec> newton_minimise() const {
    Vec x = Vec::Zero(n_);
    const double Nd = static_cast<double>(N_);
    for (int it = 0; it < 200; ++it) {
      const Vec g = exact_gradient(*this, x);
      if (g.norm() < 1e-13) return x;
      Mat H = reg_ * Mat::Identity(n_, n_);
      for (int64_t i = 0; i < N_; ++i) {
        const double m = b_(i) * A_.col(i).dot(x);
        const double sg = 1.0 / (1.0 + std::exp(-m));
        H.noalias() += (sg * (1.0 - sg) / Nd) * (A_.col(i) * A_.col(i).transpose());
      }
      const Vec d = -H.ldlt().solve(g);
      const double f = exact_value(*this, x);
      double t = 1.0;
      while (t > 1e-12 && exact_value(*this, x + t * d) > f + 1e-4 * t * g.dot(d)) t *= 0.5;
      if (t <= 1e-12) return g.norm() < 1e-9 ? std::optional<Vec>(x) : std::nullopt;
      x += t * d;
      if (x.norm() > 1e6) return std::nullopt;
    }
    return std::nullopt;
  }

  int64_t n_, N_;
  double reg_;
  Mat A_;
  Vec b_;
  ProblemMetadata meta_;
};

// f_i(x) = ||x||^2 / R^2 - log(1 + ||x - c_i||^2)
class NonconvexSumProblem final : public Problem {
 public:
  explicit NonconvexSumProblem(const ProblemSpec& s) : n_(s.n), N_(s.N), R2_(s.wall_radius * s.wall_radius) {
    if (!(s.wall_radius > 0)) throw std::invalid_argument("nonconvex_sum: wall_radius must be > 0");
    if (s.noise < 0) throw std::invalid_argument("nonconvex_sum: noise must be >= 0");
    RandomSource rng = RandomSource(s.seed).fork("nonconvex_sum");
    C_ = gaussian_matrix(n_, N_, s.noise, rng);
    if (N_ > 1) center_columns(C_);
    if (s.noise == 0) C_.setZero();
    const double v = mean_sq_col_norm(C_);
    if (!(R2_ > 1.0 + v)) throw std::invalid_argument("nonconvex_sum: wall_radius too small for the data spread");
    meta_.lipschitz_L = 2.0;
    meta_.convexity = ConvexityClass::nonconvex;
    meta_.f_min = (R2_ - 1.0 - v) / R2_ - std::log(R2_);
    meta_.variance_bound_grad = std::min(1.0, 4.0 * v);
    meta_.variance_bound_fun = v;
    meta_.x0 = Vec::Zero(n_);
    meta_.x0(0) = 1.5;
    meta_.region_center = Vec::Zero(n_);
    meta_.region_radius = s.region_radius > 0 ? s.region_radius : s.wall_radius;
    meta_.grad_bound_Lf = 2.0 * meta_.region_radius / R2_ + 1.0;
    meta_.validate(n_);
  }

  std::string kind() const override { return "nonconvex_sum"; }
  int64_t dimension() const override { return n_; }
  int64_t component_count() const override { return N_; }
  const ProblemMetadata& metadata() const override { return meta_; }

  double component_value(int64_t i, const Vec& x) const override {
    return x.squaredNorm() / R2_ - std::log1p((x - C_.col(i)).squaredNorm());
  }
  void add_component_gradient(int64_t i, const Vec& x, Vec& acc) const override {
    const Vec y = x - C_.col(i);
    acc += (2.0 / R2_) * x - (2.0 / (1.0 + y.squaredNorm())) * y;
  }
  double sum_values(const Vec& x, std::span<const int64_t> idx) const override {
    const double wall = x.squaredNorm() / R2_;
    double s = 0.0;
    for (int64_t i : idx) s += wall - std::log1p((x - C_.col(i)).squaredNorm());
    return s;
  }
  void sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const override {
    Vec g = Vec::Zero(n_);
    double wsum = 0.0;
    for (int64_t i : idx) {
      const double w = 2.0 / (1.0 + (x - C_.col(i)).squaredNorm());
      g.noalias() += w * C_.col(i);
      wsum += w;
    }
    acc += (2.0 * static_cast<double>(idx.size()) / R2_ - wsum) * x + g;
  }

 private:
  int64_t n_, N_;
  double R2_;
  Mat C_;
  ProblemMetadata meta_;
};

// f_i(x) = 1/2 ||x||^2 + z_i'x + e_i with centred z, e
class SyntheticGaussianProblem final : public Problem {
 public:
  explicit SyntheticGaussianProblem(const ProblemSpec& s) : n_(s.n), N_(s.N) {
    if (s.grad_noise_var < 0 || s.fun_noise_var < 0)
      throw std::invalid_argument("synthetic_gaussian: noise variances must be >= 0");
    if (N_ < 2) throw std::invalid_argument("synthetic_gaussian: need N >= 2");
    RandomSource rng = RandomSource(s.seed).fork("synthetic_gaussian");
    RandomSource rz = rng.fork("grad");
    RandomSource re = rng.fork("fun");
    Z_ = gaussian_matrix(n_, N_, 1.0, rz);
    center_columns(Z_);
    const double vz = mean_sq_col_norm(Z_);
    Z_ *= vz > 0 ? std::sqrt(s.grad_noise_var / vz) : 0.0;
    e_.resize(N_);
    for (int64_t i = 0; i < N_; ++i) e_(i) = re.normal();
    e_.array() -= e_.mean();
    const double ve = e_.squaredNorm() / static_cast<double>(N_);
    e_ *= ve > 0 ? std::sqrt(s.fun_noise_var / ve) : 0.0;

    meta_.lipschitz_L = 1.0;
    meta_.strong_convexity_mu = 1.0;
    meta_.convexity = ConvexityClass::strongly_convex;
    const Vec zbar = Z_.rowwise().mean();
    const double ebar = e_.mean();
    meta_.f_min = ebar - 0.5 * zbar.squaredNorm();
    meta_.f_star = meta_.f_min;
    meta_.x0 = Vec::Ones(n_);
    meta_.region_center = -zbar;
    meta_.region_radius = s.region_radius > 0 ? s.region_radius : 10.0;
    meta_.variance_bound_grad = mean_sq_col_norm(Z_);
    const Mat cov = Z_ * Z_.transpose() / static_cast<double>(N_);
    Eigen::SelfAdjointEigenSolver<Mat> es(cov, Eigen::EigenvaluesOnly);
    const double R = meta_.region_radius + zbar.norm();
    const double vf = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())) * R + std::sqrt(ve > 0 ? s.fun_noise_var : 0.0);
    meta_.variance_bound_fun = vf * vf;
    meta_.grad_bound_Lf = meta_.region_radius;
    meta_.domain_diameter_D = meta_.region_radius;
    meta_.validate(n_);
  }

  std::string kind() const override { return "synthetic_gaussian"; }
  int64_t dimension() const override { return n_; }
  int64_t component_count() const override { return N_; }
  const ProblemMetadata& metadata() const override { return meta_; }

  double component_value(int64_t i, const Vec& x) const override {
    return 0.5 * x.squaredNorm() + Z_.col(i).dot(x) + e_(i);
  }
  void add_component_gradient(int64_t i, const Vec& x, Vec& acc) const override { acc += x + Z_.col(i); }
  double sum_values(const Vec& x, std::span<const int64_t> idx) const override {
    const double base = 0.5 * x.squaredNorm();
    double s = 0.0;
    for (int64_t i : idx) s += base + Z_.col(i).dot(x) + e_(i);
    return s;
  }
  void sum_gradients(const Vec& x, std::span<const int64_t> idx, Vec& acc) const override {
    Vec zs = Vec::Zero(n_);
    for (int64_t i : idx) zs += Z_.col(i);
    acc += static_cast<double>(idx.size()) * x + zs;
  }

 private:
  int64_t n_, N_;
  Mat Z_;
  Vec e_;
  ProblemMetadata meta_;
};

std::shared_ptr<const Problem> make_builtin_quadratic(const ProblemSpec& s) {
  if (!(s.mu > 0 && s.L >= s.mu)) throw std::invalid_argument("quadratic_sc: need 0 < mu <= L");
  if (s.noise < 0) throw std::invalid_argument("quadratic_sc: noise must be >= 0");
  const int64_t n = s.n;
  RandomSource rng = RandomSource(s.seed).fork("quadratic_sc");
  RandomSource rq = rng.fork("basis");
  Eigen::HouseholderQR<Mat> qr(gaussian_matrix(n, n, 1.0, rq));
  const Mat Q = qr.householderQ();
  Vec lam(n);
  for (int64_t j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
    lam(j) = s.mu * std::pow(s.L / s.mu, t);
  }
  lam(0) = s.mu;
  lam(n - 1) = s.L;
  const Mat A = Q * lam.asDiagonal() * Q.transpose();
  RandomSource rc = rng.fork("centers");
  Mat C = gaussian_matrix(n, s.N, s.noise, rc);
  if (s.N > 1) center_columns(C);
  if (s.noise == 0) C.setZero();
  return std::make_shared<QuadraticProblem>(A, C, s.mu, s.L, Vec::Ones(n), s.region_radius);
}

}  // namespace

std::shared_ptr<const Problem> make_explicit_quadratic(const Mat& A, const Mat& centers, double region_radius) {
  if (A.rows() != A.cols() || A.rows() != centers.rows() || centers.cols() < 1)
    throw std::invalid_argument("explicit quadratic: inconsistent shapes");
  if (!A.isApprox(A.transpose(), 1e-12)) throw std::invalid_argument("explicit quadratic: A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0)) throw std::invalid_argument("explicit quadratic: A must be positive definite");
  return std::make_shared<QuadraticProblem>(A, centers, lo, hi, Vec::Ones(A.rows()), region_radius);
}

std::shared_ptr<const Problem> make_builtin(const ProblemSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("problem dimension n must be >= 1");
  if (spec.N < 1) throw std::invalid_argument("component count N must be >= 1");
  switch (spec.kind) {
    case ProblemKind::quadratic_sc: return make_builtin_quadratic(spec);
    case ProblemKind::logistic: return std::make_shared<LogisticProblem>(spec);
    case ProblemKind::nonconvex_sum: return std::make_shared<NonconvexSumProblem>(spec);
    case ProblemKind::synthetic_gaussian: return std::make_shared<SyntheticGaussianProblem>(spec);
  }
  throw std::invalid_argument("unknown problem kind");
}

std::shared_ptr<const Problem> make_builtin(ProblemKind kind, int64_t n, int64_t N, uint64_t seed) {
  ProblemSpec s;
  s.kind = kind;
  s.n = n;
  s.N = N;
  s.seed = seed;
  return make_builtin(s);
}

}  // namespace stochls

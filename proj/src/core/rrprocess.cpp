#include "core/rrprocess.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "core/errors.hpp"

namespace stochls {
namespace {

// e^lambda, snapped to an integer when it is one up to rounding so grid values are exact
double grid_base(double lambda) {
  const double b = std::exp(lambda);
  const double r = std::round(b);
  return std::abs(b - r) <= 1e-14 * b ? r : b;
}

constexpr int64_t kCacheDepth = 4096;
constexpr int64_t kShardSize = 1024;

class LevelCache {
 public:
  explicit LevelCache(const RRProcessConfig& cfg) : cfg_(cfg) {
    const int64_t count = cfg.j_max + kCacheDepth + 1;
    lo_ = cfg.j_max - kCacheDepth;
    a_.resize(static_cast<size_t>(count));
    h_.resize(static_cast<size_t>(count));
    for (int64_t j = lo_; j <= cfg.j_max; ++j) {
      const size_t i = static_cast<size_t>(j - lo_);
      a_[i] = cfg.level_value(j);
      h_[i] = cfg.Theta * cfg.h.at(j, a_[i]);
    }
  }
  double decrement(int64_t j) const {
    if (j >= lo_) return h_[static_cast<size_t>(j - lo_)];
    return cfg_.Theta * cfg_.h.at(j, cfg_.level_value(j));
  }

 private:
  const RRProcessConfig& cfg_;
  int64_t lo_;
  std::vector<double> a_, h_;
};

PathResult simulate_with(const RRProcessConfig& cfg, const LevelCache& cache, RandomSource& rng) {
  PathResult r;
  int64_t j = 0;
  double phi = cfg.Phi0;
  int64_t k = 0;
  while (phi > 0) {
    if (k >= cfg.max_steps) {
      r.censored = true;
      break;
    }
    phi = std::max(0.0, phi - cache.decrement(j));
    if (rng.bernoulli(cfg.p)) {
      j = std::min(cfg.j_max, j + 1);
    } else {
      j -= 1;
    }
    r.min_level = std::min(r.min_level, j);
    r.max_level = std::max(r.max_level, j);
    ++k;
  }
  r.T = k;
  r.final_phi = phi;
  return r;
}

}  // namespace

double HSpec::at(int64_t level, double a) const {
  switch (kind) {
    case HKind::identity: return scale * a;
    case HKind::constant: return value;
    case HKind::table: {
      if (table.empty()) throw std::invalid_argument("empty h table");
      auto it = table.upper_bound(level);
      if (it == table.begin()) return it->second;
      return std::prev(it)->second;
    }
  }
  return 0.0;
}

double RRProcessConfig::level_value(int64_t j) const { return A0 * std::pow(grid_base(lambda), static_cast<double>(j)); }

void RRProcessConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("rrprocess: " + m); };
  if (!(p > 0.5 && p <= 1)) fail("p must lie in (1/2, 1]");
  if (!(lambda > 0 && std::isfinite(lambda))) fail("lambda must be > 0");
  if (!(A0 > 0 && std::isfinite(A0))) fail("A0 must be > 0");
  if (j_max < 0) fail("j_max must be >= 0");
  if (j_bar > j_max) fail("A_bar must not exceed alpha_max");
  if (!(Theta > 0 && std::isfinite(Theta))) fail("Theta must be > 0");
  if (!(Phi0 > 0 && std::isfinite(Phi0))) fail("Phi0 must be > 0");
  if (trials < 1) fail("trials must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  switch (h.kind) {
    case HKind::identity:
      if (!(h.scale > 0)) fail("h scale must be > 0");
      break;
    case HKind::constant:
      if (!(h.value > 0)) fail("h value must be > 0");
      break;
    case HKind::table: {
      if (h.table.empty()) fail("h table must not be empty");
      double prev = 0.0;
      for (const auto& [lvl, v] : h.table) {
        if (!(v > 0)) fail("h table values must be > 0");
        if (v < prev) fail("h table must be nondecreasing in level");
        prev = v;
      }
      break;
    }
  }
}

PathResult simulate_path(const RRProcessConfig& cfg, RandomSource& rng) {
  cfg.validate();
  LevelCache cache(cfg);
  return simulate_with(cfg, cache, rng);
}

double rr_bound(const RRProcessConfig& cfg) {
  const double hb = cfg.h.at(cfg.j_bar, cfg.A_bar());
  return cfg.p / (2 * cfg.p - 1) * cfg.Phi0 / (cfg.Theta * hb) + 1;
}

StopEstimate estimate_expected_stop(const RRProcessConfig& cfg, uint64_t seed, int workers) {
  cfg.validate();
  LevelCache cache(cfg);
  const RandomSource master(seed);
  const int64_t shards = (cfg.trials + kShardSize - 1) / kShardSize;
  struct Partial {
    uint64_t sum = 0;
    unsigned __int128 sum_sq = 0;
    int64_t censored = 0;
  };
  std::vector<Partial> parts(static_cast<size_t>(shards));
  std::atomic<int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const int64_t s = next.fetch_add(1);
      if (s >= shards) return;
      Partial acc;
      const int64_t lo = s * kShardSize;
      const int64_t hi = std::min(cfg.trials, lo + kShardSize);
      for (int64_t i = lo; i < hi; ++i) {
        RandomSource r = master.fork(static_cast<uint64_t>(i));
        const PathResult pr = simulate_with(cfg, cache, r);
        const uint64_t T = static_cast<uint64_t>(pr.T);
        acc.sum += T;
        acc.sum_sq += static_cast<unsigned __int128>(T) * T;
        acc.censored += pr.censored ? 1 : 0;
      }
      parts[static_cast<size_t>(s)] = acc;
    }
  };
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(shards)));
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  Partial tot;
  for (const auto& p : parts) {
    tot.sum += p.sum;
    tot.sum_sq += p.sum_sq;
    tot.censored += p.censored;
  }
  StopEstimate e;
  const double n = static_cast<double>(cfg.trials);
  e.trials = cfg.trials;
  e.mean = static_cast<double>(tot.sum) / n;
  double var = 0.0;
  if (cfg.trials > 1) {
    // exact integer arithmetic for n*sum_sq - sum^2
    const unsigned __int128 a = tot.sum_sq * static_cast<uint64_t>(cfg.trials);
    const unsigned __int128 b = static_cast<unsigned __int128>(tot.sum) * tot.sum;
    var = static_cast<double>(a - b) / (n * (n - 1));
  }
  const double half = 1.959963984540054 * std::sqrt(var / n);
  e.ci_lo = e.mean - half;
  e.ci_hi = e.mean + half;
  e.bound = rr_bound(cfg);
  e.satisfied = e.ci_hi <= e.bound;
  e.censored = tot.censored;
  e.unreliable = static_cast<double>(tot.censored) > 0.01 * n;
  return e;
}

namespace {

struct Lattice {
  bool ok = false;
  bool collapse_levels = false;
  double unit = 0.0;
  int64_t K_stop = 0;
  int64_t levels = 0;
  std::vector<int64_t> m;  // per level, from j_floor up
};

Lattice build_lattice(const RRProcessConfig& cfg, int64_t j_floor) {
  Lattice lt;
  if (j_floor > 0 || j_floor > cfg.j_max) return lt;
  lt.collapse_levels = cfg.h.kind == HKind::constant;
  const int64_t lo = lt.collapse_levels ? 0 : j_floor;
  const int64_t hi = lt.collapse_levels ? 0 : cfg.j_max;
  std::vector<double> d;
  for (int64_t j = lo; j <= hi; ++j) d.push_back(cfg.Theta * cfg.h.at(j, cfg.level_value(j)));
  const double unit = *std::min_element(d.begin(), d.end());
  for (double v : d) {
    const double q = v / unit;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * q) return lt;
    lt.m.push_back(static_cast<int64_t>(r));
  }
  lt.unit = unit;
  const double ks = cfg.Phi0 / unit;
  lt.K_stop = static_cast<int64_t>(std::ceil(ks - 1e-9 * ks));
  lt.levels = static_cast<int64_t>(d.size());
  lt.ok = true;
  return lt;
}

}  // namespace

int64_t dp_state_count(const RRProcessConfig& cfg, int64_t j_floor) {
  const Lattice lt = build_lattice(cfg, j_floor);
  if (!lt.ok) return -1;
  return lt.levels * lt.K_stop;
}

std::optional<DpResult> expected_stop_dp(const RRProcessConfig& cfg, int64_t j_floor, int64_t max_states) {
  cfg.validate();
  const Lattice lt = build_lattice(cfg, j_floor);
  if (!lt.ok) return std::nullopt;
  const int64_t L = lt.levels;
  const int64_t K = lt.K_stop;
  if (L * K > max_states) return std::nullopt;
  // E[level][k] with k = units consumed; E = 0 once k >= K
  std::vector<double> E(static_cast<size_t>(L * K), 0.0);
  auto at = [&](int64_t lvl, int64_t k) -> double {
    return k >= K ? 0.0 : E[static_cast<size_t>(lvl * K + k)];
  };
  const double p = cfg.p;
  for (int64_t k = K - 1; k >= 0; --k) {
    for (int64_t lvl = 0; lvl < L; ++lvl) {
      const int64_t k2 = k + lt.m[static_cast<size_t>(lvl)];
      const int64_t up = std::min(L - 1, lvl + 1);
      const int64_t down = std::max<int64_t>(0, lvl - 1);
      E[static_cast<size_t>(lvl * K + k)] = 1.0 + p * at(up, k2) + (1 - p) * at(down, k2);
    }
  }
  DpResult r;
  const int64_t start = lt.collapse_levels ? 0 : -j_floor;
  r.expected_T = at(start, 0);
  r.states = L * K;
  return r;
}

}  // namespace stochls

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace stochls {

enum class HKind { identity, constant, table };

struct HSpec {
  HKind kind = HKind::identity;
  double scale = 1.0;           // identity: h(a) = scale * a
  double value = 1.0;           // constant: h(a) = value
  std::map<int64_t, double> table;  // level -> h, nondecreasing in level

  double at(int64_t level, double a) const;
};

// Abstract renewal-reward process on the step-size grid A0 * e^{lambda j}.
struct RRProcessConfig {
  double p = 0.9;
  double lambda = 0.6931471805599453;
  double A0 = 1.0;
  int64_t j_max = 0;  // alpha_max = A0 e^{lambda j_max}
  int64_t j_bar = 0;  // A_bar = A0 e^{lambda j_bar}
  double Theta = 1.0;
  HSpec h;
  double Phi0 = 100.0;
  int64_t trials = 100000;
  int64_t max_steps = 1000000;

  double level_value(int64_t j) const;
  double alpha_max() const { return level_value(j_max); }
  double A_bar() const { return level_value(j_bar); }
  void validate() const;
};

struct PathResult {
  int64_t T = 0;
  bool censored = false;
  double final_phi = 0.0;
  int64_t min_level = 0;
  int64_t max_level = 0;
};

PathResult simulate_path(const RRProcessConfig& cfg, RandomSource& rng);

struct StopEstimate {
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double bound = 0.0;
  bool satisfied = false;
  int64_t trials = 0;
  int64_t censored = 0;
  bool unreliable = false;  // more than 1% censored
};

// Shards paths across workers; results do not depend on the worker count.
StopEstimate estimate_expected_stop(const RRProcessConfig& cfg, uint64_t seed, int workers = 1);

double rr_bound(const RRProcessConfig& cfg);

// Exact E[T] by dynamic programming on the lattice of reachable (level, phi) states.
// Levels below j_floor are merged into j_floor. Needs every decrement to be an integer
// multiple of a common unit.
struct DpResult {
  double expected_T = 0.0;
  int64_t states = 0;
};

std::optional<DpResult> expected_stop_dp(const RRProcessConfig& cfg, int64_t j_floor, int64_t max_states = 50000000);
// number of lattice states the DP would visit, or -1 if the lattice is incompatible
int64_t dp_state_count(const RRProcessConfig& cfg, int64_t j_floor);

}  // namespace stochls

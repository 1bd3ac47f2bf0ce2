#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/potential.hpp"

namespace stochls {

struct SummaryRow {
  uint64_t seed = 0;
  double eps = 0.0;
  int64_t T = 0;
  bool censored = false;
};

struct LevelStats {
  double eps = 0.0;
  double mean_T = 0.0;  // over uncensored seeds
  int64_t used = 0;
  int64_t censored = 0;
};

struct RateFit {
  Regime regime = Regime::nonconvex;
  bool refused = false;
  std::string reason;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<LevelStats> levels;  // in ladder order
  std::vector<std::string> warnings;
};

// Per-level statistics in order of first appearance of each eps.
std::vector<LevelStats> level_stats(const std::vector<SummaryRow>& rows);

// nonconvex, convex: log(mean T) on log(1/eps); strongly convex: mean T on log(1/eps)
RateFit fit_rate(const std::vector<SummaryRow>& rows, Regime regime);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace stochls

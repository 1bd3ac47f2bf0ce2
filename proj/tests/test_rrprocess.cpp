#include "doctest.h"

#include <cmath>

#include "core/errors.hpp"
#include "core/rrprocess.hpp"

using namespace stochls;

namespace {

RRProcessConfig base(double p) {
  RRProcessConfig c;
  c.p = p;
  c.lambda = std::log(2.0);
  c.A0 = 1.0;
  c.Theta = 1.0;
  c.Phi0 = 100.0;
  c.trials = 20000;
  return c;
}

}  // namespace

TEST_CASE("certain increases give a deterministic stopping time") {
  RRProcessConfig c = base(1.0);
  c.h.kind = HKind::constant;
  c.h.value = 3.0;
  const StopEstimate e = estimate_expected_stop(c, 1);
  CHECK(e.mean == 34.0);
  CHECK(e.ci_lo == e.ci_hi);
  CHECK(e.bound == doctest::Approx(100.0 / 3 + 1));
  CHECK(e.satisfied);
  RandomSource rng(0);
  const PathResult r = simulate_path(c, rng);
  CHECK(r.T == 34);
  CHECK(r.final_phi == 0.0);

  c.h.kind = HKind::identity;
  CHECK(estimate_expected_stop(c, 2).mean == 100.0);
}

TEST_CASE("grid value is exact for integer bases") {
  RRProcessConfig c = base(0.9);
  c.A0 = 0.25;
  CHECK(c.level_value(2) == 1.0);
  CHECK(c.level_value(-3) == 0.03125);
}

TEST_CASE("symmetric-ish walk stays under the bound and matches the exact recursion") {
  RRProcessConfig c = base(0.9);
  c.h.kind = HKind::identity;
  c.trials = 50000;
  const StopEstimate e = estimate_expected_stop(c, 7, 2);
  CHECK(e.bound == doctest::Approx(113.5));
  CHECK(e.satisfied);
  CHECK(e.censored == 0);
  const auto dp = expected_stop_dp(c, -10);
  REQUIRE(dp);
  const double half = (e.ci_hi - e.ci_lo) / 2;
  CHECK(std::abs(dp->expected_T - e.mean) <= 3 * half);
  CHECK(dp->expected_T <= e.bound);
}

TEST_CASE("exact recursion on small lattices") {
  // constant decrement: T is Phi0 / h regardless of the walk
  RRProcessConfig c = base(0.6);
  c.h.kind = HKind::constant;
  c.h.value = 1.0;
  const auto dp = expected_stop_dp(c, -10);
  REQUIRE(dp);
  CHECK(dp->expected_T == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(dp->states == 100);
  CHECK(dp_state_count(c, -10) == 100);

  // two steps to go, level-0 decrement 1, level-1 never reached (j_max = 0)
  RRProcessConfig d = base(0.75);
  d.h.kind = HKind::identity;
  d.Phi0 = 1.5;
  // from level 0: one step leaves 0.5; then level 0 (p) or level -1 (1-p)
  // at level -1 the decrement is 0.5, so both branches stop after two steps
  const auto r = expected_stop_dp(d, -1);
  REQUIRE(r);
  CHECK(r->expected_T == doctest::Approx(2.0));

  // lattice that does not fit a common unit
  RRProcessConfig bad = base(0.75);
  bad.lambda = 1.0;
  bad.h.kind = HKind::identity;
  CHECK_FALSE(expected_stop_dp(bad, -3));
  CHECK(dp_state_count(bad, -3) == -1);
}

TEST_CASE("drift barely above one half still respects the bound") {
  RRProcessConfig c = base(0.51);
  c.A0 = 1.0 / 32;
  c.j_max = 5;
  c.j_bar = 5;
  c.h.kind = HKind::identity;
  c.trials = 20000;
  const StopEstimate e = estimate_expected_stop(c, 11);
  CHECK(c.A_bar() == 1.0);
  CHECK(e.bound == doctest::Approx(2551.0));
  CHECK(e.censored == 0);
  CHECK(e.satisfied);
}

TEST_CASE("paths stay on the grid") {
  RRProcessConfig c = base(0.7);
  c.j_max = 3;
  c.h.kind = HKind::identity;
  RandomSource master(5);
  for (uint64_t i = 0; i < 500; ++i) {
    RandomSource r = master.fork(i);
    const PathResult p = simulate_path(c, r);
    CHECK(p.max_level <= c.j_max);
    CHECK(p.min_level <= 0);
    CHECK(p.T >= 1);
    CHECK_FALSE(p.censored);
  }
}

TEST_CASE("censoring grows as the step budget shrinks") {
  RRProcessConfig c = base(0.6);
  c.h.kind = HKind::identity;
  c.trials = 4000;
  int64_t prev = -1;
  for (int64_t budget : {100000, 1000, 300, 150, 101}) {
    c.max_steps = budget;
    const StopEstimate e = estimate_expected_stop(c, 3);
    CHECK(e.censored >= prev);
    prev = e.censored;
  }
  CHECK(prev > 0);
  c.max_steps = 50;  // below Phi0 / max decrement: everything censored
  const StopEstimate e = estimate_expected_stop(c, 3);
  CHECK(e.censored == c.trials);
  CHECK(e.unreliable);
  CHECK(e.mean == 50.0);
}

TEST_CASE("worker count does not change the estimate") {
  RRProcessConfig c = base(0.75);
  c.h.kind = HKind::identity;
  c.trials = 10000;
  const StopEstimate a = estimate_expected_stop(c, 99, 1);
  const StopEstimate b = estimate_expected_stop(c, 99, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.ci_hi == b.ci_hi);
  CHECK(a.censored == b.censored);
  const StopEstimate d = estimate_expected_stop(c, 100, 1);
  CHECK(a.mean != d.mean);
}

TEST_CASE("h specifications") {
  HSpec h;
  h.kind = HKind::table;
  h.table = {{-2, 0.5}, {0, 1.0}, {3, 4.0}};
  CHECK(h.at(-5, 0) == 0.5);
  CHECK(h.at(-1, 0) == 0.5);
  CHECK(h.at(0, 0) == 1.0);
  CHECK(h.at(7, 0) == 4.0);
  h.kind = HKind::identity;
  h.scale = 2;
  CHECK(h.at(0, 0.25) == 0.5);
}

TEST_CASE("process validation") {
  RRProcessConfig c = base(0.5);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base(0.9);
  c.j_bar = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base(0.9);
  c.h.kind = HKind::table;
  c.h.table = {{0, 2.0}, {1, 1.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = base(0.9);
  c.Phi0 = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stochls {

uint64_t splitmix64(uint64_t x);
uint64_t hash_label(std::string_view label);

// Random stream whose children are derived from (seed, label) only, never from
// how many numbers the parent has already produced.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed);

  RandomSource fork(std::string_view label) const;
  RandomSource fork(uint64_t index) const;

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return engine_(); }
  // uniform on [0, 1) with 53 random bits
  double uniform();
  // uniform on {0, ..., n-1}
  int64_t uniform_index(int64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stochls

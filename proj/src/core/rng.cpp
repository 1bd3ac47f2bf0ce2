#include "core/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stochls {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t hash_label(std::string_view label) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomSource::RandomSource(uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RandomSource RandomSource::fork(std::string_view label) const {
  return RandomSource(splitmix64(seed_ ^ splitmix64(hash_label(label))));
}

RandomSource RandomSource::fork(uint64_t index) const {
  return RandomSource(splitmix64(seed_ + 0x632be59bd9b4e019ULL * (index + 1)));
}

double RandomSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int64_t RandomSource::uniform_index(int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Lemire's multiply-and-reject
  const uint64_t range = static_cast<uint64_t>(n);
  uint64_t x = engine_();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < range) {
    const uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = engine_();
      m = static_cast<unsigned __int128>(x) * range;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<int64_t>(m >> 64);
}

double RandomSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace stochls

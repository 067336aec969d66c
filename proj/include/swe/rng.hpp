#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

namespace swe::nn {

// Single seedable randomness source. Everything stochastic (init, dropout,
// shuffling, synthetic data) draws from one of these so a run is a pure
// function of its seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  bool bernoulli(double p) {
    return std::bernoulli_distribution(p)(engine_);
  }
  std::uint64_t next() { return engine_(); }

  template <typename It>
  void shuffle(It begin, It end) {
    std::shuffle(begin, end, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace swe::nn

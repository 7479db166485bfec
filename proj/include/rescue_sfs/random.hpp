#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace rescue_sfs {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: the k-th output is mix64(key + k * golden).
///
/// Satisfies UniformRandomBitGenerator. Streams for independent workers come
/// from split(); two streams with different keys never share a counter
/// sequence because keys are themselves mixed.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : key_(mix64(key ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    counter_ += kGolden;
    return mix64(key_ + counter_);
  }

  /// Uniform on the open interval (0, 1); never returns 0, so log() is safe.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exponential(rate) by inverse CDF.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

  bool bernoulli(double prob) { return uniform() < prob; }

  /// Uniform integer in [0, n). Lemire's nearly-divisionless rejection.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Poisson(mean) by sequential inversion; falls back to the library
  /// sampler for large means where inversion gets slow.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
      std::poisson_distribution<std::uint64_t> dist(mean);
      return dist(*this);
    }
    double u = uniform();
    double prob = std::exp(-mean);
    double cdf = prob;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      prob *= mean / static_cast<double>(k);
      cdf += prob;
      if (prob < 1e-300) break;
    }
    return k;
  }

  /// Independent child stream for (this key, index). The replicate seeding
  /// contract is split(master_seed, replicate_index).
  CounterRng split(std::uint64_t index) const { return CounterRng(key_ ^ mix64(index + 0x9e3779b97f4a7c15ULL)); }

  static CounterRng split(std::uint64_t master_seed, std::uint64_t index) {
    return CounterRng(master_seed).split(index);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rescue_sfs

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace nusest {

// One splitmix64 round; advances the state and returns the mixed output.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Collapses (seed, domain, index) into one well-mixed 64-bit stream key.
inline std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t domain,
                                       std::uint64_t index) noexcept {
  std::uint64_t s = seed;
  s = splitmix64(s) ^ domain;
  s = splitmix64(s) ^ index;
  return splitmix64(s);
}

// Independent substream domains. Channel realizations and observation noise
// use separate streams so noise can vary with channels held fixed.
enum class RngDomain : std::uint64_t {
  channel = 1,
  noise = 2,
  bound_suite = 3,
};

// Seedable, splittable generator with hand-rolled samplers. Distributions are
// implemented here (not via std:: distribution objects) so that outputs are
// bit-identical across standard library implementations.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, RngDomain domain, std::uint64_t index = 0)
      : engine_(derive_stream_key(seed, static_cast<std::uint64_t>(domain), index)) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  // Circular complex Gaussian with E|z|^2 = total_variance (half per part).
  std::complex<double> complex_normal(double total_variance) {
    const double scale = std::sqrt(total_variance / 2.0);
    const double re = scale * normal();
    const double im = scale * normal();
    return {re, im};
  }

  // Product-form Poisson sampler; the mean is split into chunks so that
  // exp(-chunk) never underflows, and chunk counts add (Poisson additivity).
  long poisson(double mean) {
    long count = 0;
    while (mean > 60.0) {
      count += poisson_chunk(60.0);
      mean -= 60.0;
    }
    return count + poisson_chunk(mean);
  }

 private:
  long poisson_chunk(double mean) {
    const double limit = std::exp(-mean);
    long count = 0;
    double product = uniform01();
    while (product > limit) {
      ++count;
      product *= uniform01();
    }
    return count;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}

// Counter-keyed random streams. Every consumer derives its own stream from
// (seed, tag, index pair), so replicates can run in any order or on any
// number of threads and still see identical draws. The generator is
// xoshiro256++ seeded through splitmix64; normal variates use Box-Muller.
// All of it is pinned here rather than delegated to <random> distributions,
// whose algorithms are implementation-defined and would break byte-identical
// reruns.
#ifndef PTFH_RNG_HPP
#define PTFH_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ptfh {

namespace rng_tag {
inline constexpr std::uint64_t kCovariates = 0x636f766172;
inline constexpr std::uint64_t kEffects = 0x65666665;
inline constexpr std::uint64_t kSampling = 0x73616d70;
inline constexpr std::uint64_t kAux = 0x617578;
inline constexpr std::uint64_t kBootstrap = 0x626f6f74;
inline constexpr std::uint64_t kG1 = 0x673120;
inline constexpr std::uint64_t kOracle = 0x6f7261;
}  // namespace rng_tag

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(seed, 0, 0, 0) {}

  // Stream keyed by (seed, tag, a, b); distinct keys give decorrelated streams.
  RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
            std::uint64_t b) {
    std::uint64_t sm = seed;
    sm ^= splitmix64(sm) + tag;
    sm ^= splitmix64(sm) + a;
    sm ^= splitmix64(sm) + b;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Standard normal, Box-Muller; consumes two uniforms per pair of draws.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  // Student t with 5 degrees of freedom, scaled so that the variance equals
  // `variance` (raw t5 variance is 5/3).
  double t5_scaled(double variance) {
    const double z = normal();
    double chi = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double g = normal();
      chi += g * g;
    }
    const double t = z / std::sqrt(chi / 5.0);
    return t * std::sqrt(variance * 3.0 / 5.0);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ptfh

#endif

#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace repsample {

// Splittable counter-style generator built on the SplitMix64 mixer.
//
// Substreams are derived by folding tags into the seed, so a child stream is a
// pure function of (parent seed, tag). The harness derives streams as
//   root(seed) -> replicate(r) -> purpose tag -> step/site indices
// which makes every replicate, step, and site draw independent of execution
// order: serial and parallel schedules produce identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + 0x9E3779B97F4A7C15ull)) {}

  // Child stream keyed by `tag`; does not advance this stream.
  Rng derive(std::uint64_t tag) const {
    Rng child(0);
    child.state_ = mix(state_ ^ mix(tag + 0xBF58476D1CE4E5B9ull));
    return child;
  }
  Rng derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return derive(tag_a).derive(tag_b);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Multiply-shift bounded draw (Lemire); bias is negligible for n << 2^64
    // and the mapping is deterministic, which is what we care about here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = gaussian();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Fisher-Yates shuffle of indices 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

// Stream purpose tags used when deriving substreams, kept in one place so
// ids never collide across modules.
namespace stream {
inline constexpr std::uint64_t kPolicy = 1;
inline constexpr std::uint64_t kSample = 2;
inline constexpr std::uint64_t kShift = 3;
inline constexpr std::uint64_t kSites = 4;
inline constexpr std::uint64_t kBias = 5;
inline constexpr std::uint64_t kTask = 6;
inline constexpr std::uint64_t kFolds = 7;
inline constexpr std::uint64_t kTrial = 8;
inline constexpr std::uint64_t kReplicate = 9;
inline constexpr std::uint64_t kPrior = 10;
}  // namespace stream

}  // namespace repsample

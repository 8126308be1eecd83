#pragma once

#include <cstdint>
#include <random>

namespace dtnsim {

/// Purposes for independent random substreams. Adding a purpose never
/// perturbs the draws of an existing one.
enum class StreamPurpose : std::uint64_t {
  Spawn = 1,
  Movement = 2,
  Messages = 3,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic generator. Distributions are implemented here rather than
/// with <random> distribution classes, whose output is library-specific.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Substream keyed by (master seed, stream index, purpose).
  static Rng derive(std::uint64_t master, std::uint64_t stream, StreamPurpose purpose) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s = h ^ (stream * 0xd1342543de82ef95ULL);
    h = splitmix64(s);
    s = h ^ (static_cast<std::uint64_t>(purpose) * 0xa0761d6478bd642fULL);
    return Rng(splitmix64(s));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = hi - lo;
    if (span == std::uint64_t(-1)) return next();
    return lo + uniform_index(span + 1);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dtnsim

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace viscal {

// Finalizer of the splitmix64 generator; whitens seed material so related
// inputs (consecutive dates, small indices) yield unrelated streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over bytes; stable across platforms, used for id-based seed parts
// and for fingerprinting file contents.
inline std::uint64_t hash_bytes(std::string_view s,
                                std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t part) {
  return mix64(seed ^ mix64(part));
}

inline std::uint64_t combine_seed(std::uint64_t seed, std::string_view part) {
  return combine_seed(seed, hash_bytes(part));
}

// Seeded generator with hand-rolled draws. The <random> distribution classes
// are implementation-defined, so sequences from them are not reproducible
// across standard libraries; everything here is pinned to the mt19937_64
// output stream, which the standard specifies exactly.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; the second draw of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log argument positive.
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
    const double a = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  // Uniform integer in [0, n); rejection keeps the draw exactly unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t reject_from = max - max % n;
    std::uint64_t v = engine_();
    while (reject_from != max && v >= reject_from) v = engine_();
    return v % n;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace viscal

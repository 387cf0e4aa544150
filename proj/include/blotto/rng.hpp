#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace blotto {

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Pure function of its inputs; used to give every instance/iteration its own
// independent stream so runs are reproducible regardless of execution order.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  const uint64_t golden = 0x9e3779b97f4a7c15ull;
  uint64_t h = mix64(master + golden);
  h = mix64(h ^ (a + golden + (h << 6) + (h >> 2)));
  h = mix64(h ^ (b + golden + (h << 6) + (h >> 2)));
  h = mix64(h ^ (c + golden + (h << 6) + (h >> 2)));
  return h;
}

// mt19937_64 with hand-rolled transforms: std::*_distribution output is not
// pinned by the standard, these are.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0,1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0,n)
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0,1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Index into a probability vector by inverse CDF. Entries must be
  // nonnegative; zero-probability entries are never selected.
  int sample_index(const std::vector<double>& probs) {
    double u = uniform01();
    double cum = 0.0;
    int last_positive = -1;
    for (size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = static_cast<int>(i);
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    if (last_positive < 0) throw std::runtime_error("sample_index: no positive mass");
    return last_positive;  // u landed in rounding slack past the last entry
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace blotto

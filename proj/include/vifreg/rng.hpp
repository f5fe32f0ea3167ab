#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace vifreg {

// splitmix64 mixing step; used to derive independent per-task seeds from a
// master seed so replications/folds are reproducible in isolation.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // Two mixing rounds keep nearby (master, stream) pairs uncorrelated.
  return mix_seed(master ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic random stream built on the splitmix64 generator. Both the
// engine and the distributions are implemented here because the standard
// library's distribution objects are implementation-defined and would break
// bit-reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up with splitmix64 so small seeds do not produce correlated
    // early output.
    for (int i = 0; i < 4; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the Marsaglia polar method; the second deviate of
  // each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Uniform integer in [0, bound), bound >= 1, by rejection (no modulo bias).
  int uniform_int(int bound) {
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return static_cast<int>(r % b);
  }

  // First m entries of a Fisher-Yates shuffle of 0..n-1: a uniform sample
  // without replacement, in O(n + m).
  std::vector<int> sample_without_replacement(int n, int m) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (m > n) m = n;
    for (int i = 0; i < m; ++i) {
      const int j = i + uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
  }

  std::vector<int> permutation(int n) { return sample_without_replacement(n, n); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vifreg

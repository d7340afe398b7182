#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace xicm {

/// Seeded generator with platform-independent conversions. The standard
/// distributions are implementation-defined, so results built on them could
/// differ between standard libraries; these helpers only use raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a over the bytes, finished with a splitmix64 round.
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Schedule-independent seed for one episode.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view label, std::uint64_t index);

}  // namespace xicm

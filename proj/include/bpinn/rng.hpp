#pragma once

#include <cstdint>
#include <random>

namespace bpinn {

/// Deterministic random source used everywhere a seed appears.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// floating-point mappings live here instead:
///   uniform():  (x >> 11) * 2^-53, a double in [0, 1)
///   normal():   Box-Muller on two uniform() draws, cosine branch only
/// This keeps datasets and initializations bitwise reproducible across
/// standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [lo, hi], inclusive, by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent sub-seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace bpinn

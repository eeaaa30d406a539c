#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace slicedim {

/// Stream tags for counter-based seed derivation. The numeric values are part
/// of the reproducibility contract: changing them changes every sampled stream.
enum class Stream : std::uint64_t {
  rotation = 1,
  projection = 2,
  offsets = 3,
  centers = 4,
  triples = 5,
  noise = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for sample `index` of `stream` under `master`. Pure function of its
/// arguments, so parallel workers reproduce the same streams in any order.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index);

/// mt19937_64 (whose output sequence is fixed by the C++ standard) with
/// hand-written transforms, since std:: distributions are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, Stream stream, std::uint64_t index)
      : engine_(derive_seed(master, stream, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Box-Muller transform.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace slicedim

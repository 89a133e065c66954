#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace vacal {

/// Mixes a base seed with a stream index (splitmix64 finalizer). Used to give
/// every repetition, fold and tree its own reproducible random stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Random source with platform-independent draws. The standard distributions
/// are implementation-defined, so bounded integers, uniforms and normals are
/// derived here directly from the (fully specified) mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  // Uniform double in [0, 1).
  double uniform();

  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vacal

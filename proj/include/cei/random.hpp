#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace cei {

/// Seeded generator with a fixed bits-to-double mapping, so sampled values are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Order-sensitive combination of two seeds.
std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b);
/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

/// Per-frame seed = hash(global seed, demo id, frame index).
std::uint64_t derive_frame_seed(std::uint64_t global_seed, std::string_view demo_id, std::size_t frame);
/// Per-demo seed = hash(global seed, demo id).
std::uint64_t derive_demo_seed(std::uint64_t global_seed, std::string_view demo_id);

}  // namespace cei

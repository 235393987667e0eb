#include "cei/random.hpp"

#include <algorithm>

namespace cei {

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t state) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    state ^= bytes[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint64_t fnv1a64(std::string_view text) { return fnv1a64(text.data(), text.size()); }

std::uint64_t derive_demo_seed(std::uint64_t global_seed, std::string_view demo_id) {
  return combine_seed(global_seed, fnv1a64(demo_id));
}

std::uint64_t derive_frame_seed(std::uint64_t global_seed, std::string_view demo_id, std::size_t frame) {
  return combine_seed(derive_demo_seed(global_seed, demo_id), static_cast<std::uint64_t>(frame));
}

}  // namespace cei

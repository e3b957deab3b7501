#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace mnacgt {

// Master seed plus stream index. Identical (master, stream) pairs always
// reproduce identical draws.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  Seed child(std::uint64_t index) const { return Seed{master, mix(stream, index + 0x632BE59BD9B4E019ULL)}; }

  static constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }
};

// Purpose tags keep the draws of different model components independent
// even when they share a Seed.
enum class Purpose : std::uint64_t {
  signature = 1,
  activity = 2,
  fading = 3,
  noise = 4,
  q1_draws = 5,
  q2_draws = 6,
};

using Engine = std::mt19937_64;

inline Engine make_engine(Seed seed, Purpose purpose) {
  std::uint64_t state = Seed::mix(Seed::mix(seed.master, static_cast<std::uint64_t>(purpose)), seed.stream);
  std::array<std::uint32_t, 8> words{};
  for (auto& w : words) {
    // splitmix64
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    w = static_cast<std::uint32_t>((z ^ (z >> 31)) >> 16);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace mnacgt

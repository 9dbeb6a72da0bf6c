#pragma once

#include <array>
#include <bit>
#include <cstdint>

namespace bimatch {

// Bit-mixing step used to expand seeds into stream states (splitmix64).
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// xoshiro256++ generator.  Deterministic across platforms; every simulation
// stream is derived from (seed, stream) so replications are reproducible and
// independent of each other.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) { reseed(seed); }

  static Xoshiro256pp for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Xoshiro256pp(seed + stream * 0x9E3779B97F4A7C15ull);
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
    // The all-zero state is a fixed point; splitmix64 cannot produce four
    // zero outputs from one seed, but keep the guard explicit.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::array<std::uint64_t, 4> state_;
};

}  // namespace bimatch

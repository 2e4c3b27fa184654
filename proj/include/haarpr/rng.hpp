#pragma once

#include <cstdint>
#include <cstddef>

namespace haarpr {

// splitmix64, used only to expand seeds into full generator states.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna). Streams are derived from a master seed
// and a stream id so workers can draw independently and reproducibly.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed;
    // fold the stream id into the seeding sequence
    sm ^= 0x9e3779b97f4a7c15ULL * (stream + 1);
    for (int i = 0; i < 4; ++i) s_[i] = splitmix64(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on (0,1); never returns 0 or 1
  double next_double() {
    const std::uint64_t u = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(u) + 0.5) * 0x1.0p-53;
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace haarpr

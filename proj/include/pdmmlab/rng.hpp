#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pdmmlab {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Splittable sub-stream derivation: master seed + stable role label + index.
// Adding runs or roles never perturbs the streams of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the role label
  for (unsigned char c : role) {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return mix64(mix64(master) ^ mix64(h) ^ mix64(index));
}

// Deterministic RNG with explicitly coded uniform/normal mappings, so a seed
// pins the exact sample stream (std::normal_distribution is
// implementation-defined; Box-Muller here is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal; two uniforms per draw, no cached second value.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Uniform in {0, ..., n-1}.
  int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

 private:
  static constexpr double two_pi = 6.283185307179586476925286766559;
  std::mt19937_64 eng_;
};

}  // namespace pdmmlab

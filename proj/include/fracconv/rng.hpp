#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace fracconv {

// SplitMix64 output function (Steele, Lea & Flood). Used as a keyed hash so
// that every draw is a pure function of (key, counter).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed of ensemble member `index` derived from a master seed. Members can be
// generated in any order or on any worker without changing their streams.
constexpr std::uint64_t member_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(mix64(key)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter)); }

  // Uniform on (0, 1]; 53 random bits.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  // Two independent standard normals from counters 2c and 2c+1 (Box-Muller).
  std::pair<double, double> normal_pair(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  double normal(std::uint64_t counter) const { return normal_pair(counter).first; }

 private:
  std::uint64_t key_;
};

}  // namespace fracconv

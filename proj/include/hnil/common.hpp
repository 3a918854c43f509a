#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hnil {

// Malformed or inconsistent input data (files, corpora, checkpoints). CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values surfacing in the numeric pipeline. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent RNG streams from a base
// seed plus structural coordinates (iteration, pass, vertex, ...) so that
// walk content does not depend on scheduling order.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(base);
  s = mix64(s ^ (a + 0x100000001b3ULL));
  s = mix64(s ^ (b + 0x9e3779b9ULL));
  s = mix64(s ^ (c + 0x85ebca6bULL));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace hnil

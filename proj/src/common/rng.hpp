// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_COMMON_RNG_HPP_
#define LATENTREC_COMMON_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace latentrec {

// splitmix64 finalizer; used to derive independent stage seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a named stage ("synth", "init", "sft", "rl", ...).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so the ones we need are written out here on top of raw draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform integer in [0, n); rejection sampling, no floating point.
  std::uint64_t below(std::uint64_t n);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller (one value per call).
  double normal();

  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

}  // namespace latentrec

#endif  // LATENTREC_COMMON_RNG_HPP_

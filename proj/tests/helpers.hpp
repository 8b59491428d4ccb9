#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <cstdint>

#include <omsense/omsense.hpp>

// Deterministic 64-bit LCG so property tests sample the same points on every
// platform and run.
struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed) {}

  double unit() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
};

inline double rel_dev(std::complex<double> got, std::complex<double> want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-30);
}

inline double rel_dev(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-30);
}

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rhsim {

/// DRAM clock cycles. All timing state is kept in this unit.
using Cycle = std::int64_t;

inline constexpr Cycle kNever = std::numeric_limits<Cycle>::min() / 4;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// A simulation component was asked to do something the DRAM protocol
/// forbids. Always a bug in the caller.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class UnsupportedConfig : public Error {
 public:
  using Error::Error;
};

/// SplitMix64 step; used to derive independent seeds from one master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from a 64-bit generator. Platform independent,
/// unlike std::uniform_real_distribution.
template <class Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace rhsim

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhsim/workload/trace.hpp"

namespace rhsim::workload {

/// A synthetic stand-in for one application.
struct BenchmarkSpec {
  std::string name;
  RandomTraceSpec trace;
};

/// Sixteen benchmarks whose standalone MPKI spans 10 to 740. `length` is
/// the trace length in instructions.
std::vector<BenchmarkSpec> synthetic_benchmarks(std::uint64_t length, std::uint64_t seed = 1);

struct MixSpec {
  std::string name;
  std::vector<std::string> benchmarks;
};

/// `count` eight-core mixes of increasing memory intensity.
std::vector<MixSpec> synthetic_mixes(std::uint32_t count = 8, std::uint32_t cores = 8);

const BenchmarkSpec& find_benchmark(const std::vector<BenchmarkSpec>& all, const std::string& name);

}  // namespace rhsim::workload

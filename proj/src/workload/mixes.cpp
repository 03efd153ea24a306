#include "rhsim/workload/mixes.hpp"

#include <cstdio>

#include "rhsim/common.hpp"

namespace rhsim::workload {

namespace {

struct Shape {
  double mpki;
  std::uint64_t footprint_mb;
  double locality;
  double conflict;
};

// Footprints stay well above the LLC so the miss rate is reachable. The
// conflict walks stand in for the hot rows real programs revisit within a
// refresh window, which a short simulation would otherwise never reach.
constexpr Shape kShapes[] = {
    {10, 32, 0.6, 0.10},   {15, 48, 0.3, 0.05},  {22, 32, 0.5, 0.15},  {35, 64, 0.2, 0.05},
    {50, 48, 0.6, 0.10},   {75, 96, 0.4, 0.05},  {100, 64, 0.3, 0.10}, {140, 128, 0.5, 0.05},
    {190, 96, 0.2, 0.10},  {250, 128, 0.6, 0.05}, {320, 160, 0.3, 0.10}, {400, 192, 0.5, 0.05},
    {480, 192, 0.2, 0.05}, {560, 224, 0.6, 0.10}, {650, 240, 0.4, 0.05}, {740, 240, 0.7, 0.05},
};

}  // namespace

std::vector<BenchmarkSpec> synthetic_benchmarks(std::uint64_t length, std::uint64_t seed) {
  std::vector<BenchmarkSpec> out;
  std::uint64_t i = 0;
  for (const auto& s : kShapes) {
    char name[32];
    std::snprintf(name, sizeof name, "syn%03d", static_cast<int>(s.mpki));
    BenchmarkSpec b;
    b.name = name;
    b.trace.mpki = s.mpki;
    b.trace.footprint_bytes = s.footprint_mb << 20;
    b.trace.length = length;
    b.trace.locality = s.locality;
    b.trace.conflict_fraction = s.conflict;
    b.trace.seed = derive_seed(seed, i++);
    out.push_back(b);
  }
  return out;
}

std::vector<MixSpec> synthetic_mixes(std::uint32_t count, std::uint32_t cores) {
  const auto n = static_cast<std::uint32_t>(std::size(kShapes));
  if (count == 0 || cores == 0 || cores > n) throw RangeError("invalid mix shape");
  std::vector<MixSpec> out;
  const auto bench = synthetic_benchmarks(1);
  for (std::uint32_t m = 0; m < count; ++m) {
    // Mix m draws from a window that slides toward the memory-intensive end,
    // always keeping two light benchmarks for contrast.
    const std::uint32_t span = n - cores + 2;
    const std::uint32_t start = count > 1 ? m * (span - 1) / (count - 1) : 0;
    MixSpec mix;
    mix.name = "mix" + std::to_string(m);
    for (std::uint32_t c = 0; c < cores; ++c) {
      const std::uint32_t idx = c < 2 ? (m + c) % n : std::min(n - 1, start + c);
      mix.benchmarks.push_back(bench[idx].name);
    }
    out.push_back(mix);
  }
  return out;
}

const BenchmarkSpec& find_benchmark(const std::vector<BenchmarkSpec>& all, const std::string& name) {
  for (const auto& b : all) {
    if (b.name == name) return b;
  }
  throw ConfigError("unknown benchmark '" + name + "'");
}

}  // namespace rhsim::workload

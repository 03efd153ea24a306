#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/memctrl/controller.hpp"
#include "rhsim/mitigation/policy.hpp"
#include "rhsim/workload/cache.hpp"
#include "rhsim/workload/trace.hpp"

namespace rhsim::workload {

struct CoreParams {
  std::uint32_t issue_width = 4;
  std::uint32_t window = 128;
  /// Outstanding LLC read misses per core; 0 means limited by the window.
  std::uint32_t mshrs = 0;
};

struct SystemConfig {
  dram::DramConfig dram;
  memctrl::ControllerParams controller;
  /// Mechanism::None is the unprotected baseline.
  mitigation::MechanismParams mechanism;
  CacheConfig llc;
  CoreParams core;
  std::uint32_t cpu_freq_mhz = 4000;
  /// Instructions each core must retire.
  std::uint64_t instructions = 2'000'000;
  /// Instructions per core replayed through the LLC only, before timing.
  std::uint64_t warmup_instructions = 0;
  /// Physical memory is split into this many equal regions; core i uses
  /// region i unless told otherwise.
  std::uint32_t address_regions = 8;
};

struct CoreResult {
  std::uint64_t instructions = 0;
  std::uint64_t cycles = 0;  // CPU cycles to retire `instructions`
  double ipc = 0.0;
  std::uint64_t llc_misses = 0;
  double mpki = 0.0;
};

struct SimResult {
  std::vector<CoreResult> cores;
  memctrl::Metrics memory;
  Cycle dram_cycles = 0;
};

using TracePtr = std::shared_ptr<const Trace>;

/// Runs until every core has retired `cfg.instructions`; traces wrap, and
/// finished cores keep running so the others see the same contention.
/// `regions` optionally overrides the address region of each core.
SimResult simulate(const std::vector<TracePtr>& traces, const SystemConfig& cfg,
                   const std::vector<std::uint32_t>& regions = {});

/// Sum over cores of shared_ipc / alone_ipc.
double weighted_speedup(const std::vector<double>& shared_ipc, const std::vector<double>& alone_ipc);

/// 100 * ws / baseline_ws.
double normalized_performance(double ws, double baseline_ws);

}  // namespace rhsim::workload

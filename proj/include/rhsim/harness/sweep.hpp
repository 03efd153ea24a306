#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rhsim/harness/config.hpp"
#include "rhsim/mitigation/security.hpp"
#include "rhsim/workload/system.hpp"

namespace rhsim::harness {

enum class RowKind { Baseline, Mix, Aggregate };

std::string_view to_string(RowKind k);

struct SweepRow {
  RowKind kind = RowKind::Mix;
  mitigation::Mechanism mechanism = mitigation::Mechanism::None;
  std::uint32_t hc_first = 0;
  /// Mix name; empty for aggregates.
  std::string mix;
  bool supported = true;
  std::string na_reason;

  double bandwidth_overhead = 0.0;
  double normalized_performance = 0.0;
  double weighted_speedup = 0.0;
  /// Spread across mixes; equal to the value itself on per-mix rows.
  double overhead_min = 0.0;
  double overhead_max = 0.0;
  double performance_min = 0.0;
  double performance_max = 0.0;

  std::uint64_t acts = 0;
  std::uint64_t mitigation_refs = 0;
  std::uint64_t dram_cycles = 0;
};

struct TunedEntry {
  mitigation::Mechanism mechanism = mitigation::Mechanism::None;
  std::uint32_t hc_first = 0;
  mitigation::TunedMechanism tuned;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<std::string> mixes;
  /// Baseline rows first, then per (mechanism, hc_first) in config order:
  /// the per-mix rows followed by their aggregate.
  std::vector<SweepRow> rows;
  std::vector<TunedEntry> tuned;
  /// Alone IPC per mix and core, measured without a mechanism.
  std::map<std::string, std::vector<double>> alone_ipc;

  const SweepRow* aggregate(mitigation::Mechanism m, std::uint32_t hc_first) const;
  std::size_t count(RowKind k) const;
};

/// Called after every finished simulation with (done, total).
using SweepProgress = std::function<void(std::size_t, std::size_t)>;

/// Unsupported pairs become N/A aggregate rows. Every number depends only on
/// the config, regardless of `jobs`.
SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress = {});

/// Simulates a single mix under one mechanism; Mechanism::None is the
/// baseline.
workload::SimResult simulate_mix(const ExperimentConfig& config, const MixConfig& mix, mitigation::Mechanism m,
                                 std::uint32_t hc_first);

/// Attack-based check of one mechanism at one hc_first with the
/// config's security settings. `passed` compares the failure rate against
/// `security.target` for probabilistic mechanisms and zero otherwise.
struct VerifyOutcome {
  mitigation::MechanismParams params;
  mitigation::TunedMechanism tuned;
  mitigation::SecurityResult result;
  bool deterministic = true;
  bool passed = false;
};

VerifyOutcome verify(const ExperimentConfig& config, mitigation::Mechanism m, std::uint32_t hc_first);

/// Lowest hc_first of each DRAM type-node among the bundled profiles.
std::map<std::string, std::uint32_t> type_node_minima();

/// The mixes the config describes, synthetic ones expanded.
std::vector<MixConfig> resolve_mixes(const ExperimentConfig& config);

}  // namespace rhsim::harness

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rhsim/dram/config.hpp"
#include "rhsim/fault/profile.hpp"
#include "rhsim/memctrl/controller.hpp"
#include "rhsim/mitigation/policy.hpp"
#include "rhsim/workload/mixes.hpp"

namespace rhsim::harness {

/// hc_first values of the default sweep, weakest chip last.
std::vector<std::uint32_t> default_hc_sweep();

struct MixConfig {
  std::string name;
  /// Names from the synthetic benchmark catalog...
  std::vector<std::string> benchmarks;
  /// ...or trace files, one per core.
  std::vector<std::string> traces;
};

struct WorkloadConfig {
  /// Used when `mixes` is empty.
  std::uint32_t synthetic_mixes = 8;
  std::uint32_t cores = 8;
  /// Instructions per generated trace; 0 means instructions + warmup.
  std::uint64_t trace_length = 0;
  std::vector<MixConfig> mixes;
};

struct SecurityConfig {
  std::uint64_t trials = 1000;
  std::optional<std::uint64_t> window_acts;
  bool victim_only = false;
  /// Per-trial failure rate a probabilistic mechanism may show.
  double target = 1e-3;
};

struct ExperimentConfig {
  dram::DramConfig dram;
  memctrl::ControllerParams controller;
  std::vector<mitigation::Mechanism> mechanisms = {
      mitigation::Mechanism::IncreasedRefresh, mitigation::Mechanism::PARA, mitigation::Mechanism::ProHIT,
      mitigation::Mechanism::MRLoc,            mitigation::Mechanism::TWiCe, mitigation::Mechanism::TWiCeIdeal,
      mitigation::Mechanism::Ideal};
  std::vector<std::uint32_t> hc_sweep = default_hc_sweep();
  /// Template for every mechanism; mechanism and hc_first are overwritten.
  mitigation::MechanismParams mechanism_params;
  WorkloadConfig workload;
  std::uint64_t instructions = 50000;
  std::uint64_t warmup_instructions = 100000;
  std::uint64_t seed = 1;
  /// Concurrent simulations; 0 means one per hardware thread.
  std::uint32_t jobs = 0;
  std::string output_dir = "rhsim-out";
  /// Bundled profile label or profile file, for characterization.
  std::optional<std::string> profile;
  std::optional<fault::ProfileSpec> profile_spec;
  SecurityConfig security;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and wrong types raise
/// ConfigError naming the offending path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// Resolves `profile`/`profile_spec` to a generated profile.
fault::VulnerabilityProfile resolve_profile(const ExperimentConfig& c);

}  // namespace rhsim::harness

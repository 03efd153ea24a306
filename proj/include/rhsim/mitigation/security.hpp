#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"
#include "rhsim/mitigation/policy.hpp"

namespace rhsim::mitigation {

/// Un-refreshed adjacent activations per row: incremented when a
/// physically adjacent row is activated, cleared when the row is refreshed
/// or activated itself.
///
/// A row fails once it holds hc_first activations after the mitigation has
/// answered the activation that got it there; refreshes issued in response
/// to an ACT (before the bank's next ACT) still count as in time. settle()
/// performs that check and runs automatically on the bank's next ACT.
class ExposureTracker {
 public:
  ExposureTracker(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first);

  void on_activate(std::uint32_t bank, std::uint32_t row);
  void on_refresh(std::uint32_t bank, std::uint32_t row);
  /// Regular REF: rows [first, last) in every bank.
  void on_ref(std::uint32_t first, std::uint32_t last);
  /// Checks the victims of the bank's last ACT.
  void settle(std::uint32_t bank);
  void settle_all();
  /// Restricts failure checks to one row; other rows are still counted.
  void watch_only(std::optional<std::uint32_t> row) { watch_ = row; }
  /// Clears every counter; cost proportional to the rows touched so far.
  void reset();

  std::uint32_t exposure(std::uint32_t bank, std::uint32_t row) const { return counts_.at(bank).at(row); }
  std::uint32_t max_exposure() const { return max_; }
  /// Settled activations that left a row at >= hc_first.
  std::uint64_t violations() const { return violations_; }
  bool failed() const { return violations_ > 0; }

 private:
  dram::RowMapping mapping_;
  std::uint32_t hc_first_;
  std::vector<std::vector<std::uint32_t>> counts_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> touched_;
  std::vector<dram::NeighborList> unsettled_;
  std::optional<std::uint32_t> watch_;
  std::uint32_t max_ = 0;
  std::uint64_t violations_ = 0;
};

struct AttackOptions {
  /// Victim row; defaults to the middle of the bank.
  std::optional<std::uint32_t> victim;
  /// Stop after this many aggressor activations instead of one refresh
  /// window.
  std::optional<std::uint64_t> window_acts;
  /// Start each trial at a random point of the REF schedule.
  bool random_ref_phase = true;
  /// Judge only the double-sided victim instead of every row.
  bool victim_only = false;
};

struct TrialResult {
  bool failed = false;
  std::uint32_t max_exposure = 0;
  std::uint64_t activations = 0;
  std::uint64_t directives = 0;
};

/// One double-sided attack against a fresh policy on a single bank.
TrialResult run_attack_trial(const MechanismParams& params, const dram::DramConfig& cfg,
                             const AttackOptions& opts, std::uint64_t seed);

struct SecurityResult {
  std::uint64_t failures = 0;
  std::uint64_t trials = 0;
  double failure_rate = 0.0;
  double upper_conf_bound = 0.0;
  std::uint32_t max_exposure = 0;
  std::uint64_t directives = 0;
};

/// Two-sided Clopper-Pearson upper limit at `confidence`.
double clopper_pearson_upper(std::uint64_t failures, std::uint64_t trials, double confidence = 0.95);

/// Repeats the attack `trials` times with independent seeds.
SecurityResult verify_security(const MechanismParams& params, const dram::DramConfig& cfg,
                               std::uint64_t trials, std::uint64_t seed, const AttackOptions& opts = {});

/// Single-bank copy of `cfg` used by the attack bench.
dram::DramConfig attack_bank_config(const dram::DramConfig& cfg);

}  // namespace rhsim::mitigation

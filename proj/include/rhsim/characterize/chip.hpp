#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/fault/chip.hpp"
#include "rhsim/fault/pattern.hpp"
#include "rhsim/fault/profile.hpp"

namespace rhsim::characterize {

/// What a characterization routine may do to a chip. A hardware backend
/// would implement the same calls on a test infrastructure.
class ChipPort {
 public:
  virtual ~ChipPort() = default;

  virtual std::uint32_t rows() const = 0;
  virtual std::uint32_t row_bits() const = 0;
  /// Timing used for the 32 ms core-loop bound.
  virtual const dram::DramConfig& timing() const = 0;
  virtual bool on_die_ecc() const = 0;

  /// Writes `dp` into the whole chip; row-alternating patterns are aligned
  /// so that `victim` holds the base byte.
  virtual void write_pattern(fault::DataPattern dp, std::uint32_t victim) = 0;
  virtual void set_refresh(bool enabled) = 0;
  virtual void refresh_row(std::uint32_t row) = 0;
  /// Core loop: `count` rounds of (ACT a, ACT b), or `count` ACTs of `a`
  /// when `b` is empty.
  virtual void hammer(std::uint32_t a, std::optional<std::uint32_t> b, std::uint64_t count) = 0;
  virtual std::vector<fault::ReadFlip> read_row(std::uint32_t row) = 0;
  /// Writes the expected data back into a row.
  virtual void restore_row(std::uint32_t row) = 0;
  /// Selects the test iteration; repeated iterations may see threshold
  /// noise.
  virtual void set_iteration(std::uint32_t iteration) = 0;
};

enum class ChipCommand { WritePattern, RefreshOff, RefreshOn, RefreshRow, Hammer, Read, Restore };

std::string_view to_string(ChipCommand c);

struct LogEntry {
  ChipCommand command = ChipCommand::Read;
  std::uint32_t row = 0;
  std::optional<std::uint32_t> row2;
  std::uint64_t count = 0;
  /// Simulated duration of a core loop.
  double duration_ns = 0.0;
};

/// ChipPort over the fault model, with an optional command log.
class SimulatedChip final : public ChipPort {
 public:
  explicit SimulatedChip(std::shared_ptr<const fault::VulnerabilityProfile> profile);

  std::uint32_t rows() const override { return state_.rows(); }
  std::uint32_t row_bits() const override;
  const dram::DramConfig& timing() const override { return timing_; }
  bool on_die_ecc() const override { return state_.profile().spec.on_die_ecc; }

  void write_pattern(fault::DataPattern dp, std::uint32_t victim) override;
  void set_refresh(bool enabled) override;
  void refresh_row(std::uint32_t row) override;
  void hammer(std::uint32_t a, std::optional<std::uint32_t> b, std::uint64_t count) override;
  std::vector<fault::ReadFlip> read_row(std::uint32_t row) override;
  void restore_row(std::uint32_t row) override;
  void set_iteration(std::uint32_t iteration) override { iteration_ = iteration; }

  void enable_log(bool on) { logging_ = on; }
  const std::vector<LogEntry>& log() const { return log_; }
  void clear_log() { log_.clear(); }
  bool refresh_enabled() const { return refresh_; }
  const fault::ChipState& state() const { return state_; }
  const fault::VulnerabilityProfile& profile() const { return state_.profile(); }

 private:
  void record(LogEntry e);

  fault::ChipState state_;
  dram::DramConfig timing_;
  bool refresh_ = true;
  std::uint32_t iteration_ = 0;
  bool logging_ = false;
  std::vector<LogEntry> log_;
};

}  // namespace rhsim::characterize

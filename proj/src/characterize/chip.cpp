#include "rhsim/characterize/chip.hpp"

#include <string>

#include "rhsim/common.hpp"

namespace rhsim::characterize {

std::string_view to_string(ChipCommand c) {
  switch (c) {
    case ChipCommand::WritePattern: return "write_pattern";
    case ChipCommand::RefreshOff: return "refresh_off";
    case ChipCommand::RefreshOn: return "refresh_on";
    case ChipCommand::RefreshRow: return "refresh_row";
    case ChipCommand::Hammer: return "hammer";
    case ChipCommand::Read: return "read";
    case ChipCommand::Restore: return "restore";
  }
  return "?";
}

SimulatedChip::SimulatedChip(std::shared_ptr<const fault::VulnerabilityProfile> profile)
    : state_(profile), timing_(profile->dram_config()) {}

std::uint32_t SimulatedChip::row_bits() const {
  return static_cast<std::uint32_t>(state_.profile().bits_per_row());
}

void SimulatedChip::record(LogEntry e) {
  if (logging_) log_.push_back(e);
}

void SimulatedChip::write_pattern(fault::DataPattern dp, std::uint32_t victim) {
  state_.write_pattern(dp, victim);
  state_.refresh_all();
  record({ChipCommand::WritePattern, victim, std::nullopt, 0, 0.0});
}

void SimulatedChip::set_refresh(bool enabled) {
  refresh_ = enabled;
  record({enabled ? ChipCommand::RefreshOn : ChipCommand::RefreshOff, 0, std::nullopt, 0, 0.0});
}

void SimulatedChip::refresh_row(std::uint32_t row) {
  state_.refresh_row(row);
  record({ChipCommand::RefreshRow, row, std::nullopt, 0, 0.0});
}

void SimulatedChip::hammer(std::uint32_t a, std::optional<std::uint32_t> b, std::uint64_t count) {
  const std::uint64_t acts = b ? 2 * count : count;
  if (!fault::fits_core_loop(timing_, acts)) {
    throw RangeError(std::to_string(acts) + " activations exceed the 32 ms core-loop bound");
  }
  auto run = [&](std::uint64_t n) {
    if (b) {
      state_.activate_pair(a, *b, n);
    } else {
      state_.activate(a, n);
    }
  };
  if (refresh_) {
    // Periodic refresh lands somewhere inside the loop; take the midpoint.
    run(count / 2);
    state_.refresh_all();
    run(count - count / 2);
  } else {
    run(count);
  }
  record({ChipCommand::Hammer, a, b, count, static_cast<double>(acts) * timing_.t_rc_ns});
}

std::vector<fault::ReadFlip> SimulatedChip::read_row(std::uint32_t row) {
  record({ChipCommand::Read, row, std::nullopt, 0, 0.0});
  return state_.read_row(row, iteration_);
}

void SimulatedChip::restore_row(std::uint32_t row) {
  state_.restore_row(row);
  record({ChipCommand::Restore, row, std::nullopt, 0, 0.0});
}

}  // namespace rhsim::characterize

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rhsim/common.hpp"
#include "rhsim/dram/config.hpp"

namespace rhsim::dram {

struct RowAddress {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank_group = 0;
  std::uint32_t bank = 0;
  std::uint32_t row = 0;

  friend bool operator==(const RowAddress&, const RowAddress&) = default;

  /// Throws RangeError if any index exceeds the configured organization.
  void validate(const DramConfig& cfg) const;
  /// Flat bank index in [0, cfg.total_banks()).
  std::uint32_t flat_bank(const DramConfig& cfg) const;
  static RowAddress from_flat_bank(const DramConfig& cfg, std::uint32_t flat, std::uint32_t row);
};

enum class CommandKind { ACT, PRE, RD, WR, REF, MitigationREF };

std::string_view to_string(CommandKind k);

struct Command {
  CommandKind kind = CommandKind::ACT;
  RowAddress target;              // row field unused for PRE and REF
  std::uint32_t ref_batch = 0;    // REF only
  Cycle issue_cycle = 0;
};

/// Timing parameters of one bank, pre-converted to cycles.
struct BankTiming {
  Cycle t_rc = 0;
  Cycle t_ras = 0;
  Cycle t_rp = 0;
  Cycle t_rcd = 0;
  Cycle ref_busy = 0;
  std::uint32_t rows = 0;
  std::uint32_t rows_per_ref = 1;

  static BankTiming from(const DramConfig& cfg);
};

class BankState {
 public:
  explicit BankState(std::uint32_t rows);

  std::optional<std::uint32_t> open_row;
  Cycle last_act_cycle = kNever;
  Cycle last_pre_cycle = kNever;
  /// Bank unavailable for row commands before this cycle (REF, MitigationREF).
  Cycle busy_until = 0;

  std::uint32_t rows() const { return static_cast<std::uint32_t>(last_refresh_.size()); }
  Cycle last_refresh_cycle(std::uint32_t row) const { return last_refresh_.at(row); }
  std::uint64_t activation_epoch(std::uint32_t row) const { return act_epoch_.at(row); }

 private:
  friend void apply(BankState&, const Command&, Cycle, const BankTiming&);
  std::vector<Cycle> last_refresh_;
  std::vector<std::uint64_t> act_epoch_;
};

/// Rows refreshed by REF batch `batch`: [batch*rows_per_ref, (batch+1)*rows_per_ref)
/// clipped to the bank.
struct RowRange {
  std::uint32_t first = 0;
  std::uint32_t last = 0;  // exclusive
};
RowRange ref_batch_rows(const BankTiming& t, std::uint32_t batch);

/// True iff `cmd` may be issued to this bank at `now`.
bool timing_allows(const BankState& state, const Command& cmd, Cycle now, const BankTiming& t);

/// Applies `cmd` to the bank. Throws ProtocolViolation when timing_allows()
/// is false.
void apply(BankState& state, const Command& cmd, Cycle now, const BankTiming& t);

/// True iff at least t_refi has elapsed since the last REF.
bool refresh_due(const DramConfig& cfg, Cycle now, Cycle last_ref_cycle);
bool refresh_due(Cycle t_refi, Cycle now, Cycle last_ref_cycle);

}  // namespace rhsim::dram

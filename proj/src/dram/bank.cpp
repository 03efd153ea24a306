#include "rhsim/dram/bank.hpp"

#include <algorithm>

namespace rhsim::dram {

void RowAddress::validate(const DramConfig& cfg) const {
  if (channel >= cfg.channels || rank >= cfg.ranks || bank_group >= cfg.bank_groups ||
      bank >= cfg.banks_per_group || row >= cfg.rows_per_bank) {
    throw RangeError("row address out of range");
  }
}

std::uint32_t RowAddress::flat_bank(const DramConfig& cfg) const {
  return ((channel * cfg.ranks + rank) * cfg.bank_groups + bank_group) * cfg.banks_per_group + bank;
}

RowAddress RowAddress::from_flat_bank(const DramConfig& cfg, std::uint32_t flat, std::uint32_t row) {
  RowAddress a;
  a.row = row;
  a.bank = flat % cfg.banks_per_group;
  flat /= cfg.banks_per_group;
  a.bank_group = flat % cfg.bank_groups;
  flat /= cfg.bank_groups;
  a.rank = flat % cfg.ranks;
  a.channel = flat / cfg.ranks;
  return a;
}

std::string_view to_string(CommandKind k) {
  switch (k) {
    case CommandKind::ACT: return "ACT";
    case CommandKind::PRE: return "PRE";
    case CommandKind::RD: return "RD";
    case CommandKind::WR: return "WR";
    case CommandKind::REF: return "REF";
    case CommandKind::MitigationREF: return "MitigationREF";
  }
  return "?";
}

BankTiming BankTiming::from(const DramConfig& cfg) {
  BankTiming t;
  t.t_rc = cfg.t_rc();
  t.t_ras = cfg.t_ras();
  t.t_rp = cfg.t_rp();
  t.t_rcd = cfg.t_rcd();
  t.ref_busy = cfg.ref_busy();
  t.rows = cfg.rows_per_bank;
  t.rows_per_ref = cfg.rows_per_ref();
  return t;
}

BankState::BankState(std::uint32_t rows) : last_refresh_(rows, 0), act_epoch_(rows, 0) {}

RowRange ref_batch_rows(const BankTiming& t, std::uint32_t batch) {
  const std::uint64_t first = std::uint64_t{batch} * t.rows_per_ref;
  const std::uint64_t last = first + t.rows_per_ref;
  RowRange r;
  r.first = static_cast<std::uint32_t>(std::min<std::uint64_t>(first, t.rows));
  r.last = static_cast<std::uint32_t>(std::min<std::uint64_t>(last, t.rows));
  return r;
}

bool timing_allows(const BankState& s, const Command& cmd, Cycle now, const BankTiming& t) {
  const bool precharged = !s.open_row.has_value();
  switch (cmd.kind) {
    case CommandKind::ACT:
    case CommandKind::MitigationREF:
      return precharged && cmd.target.row < s.rows() && now - s.last_act_cycle >= t.t_rc &&
             now - s.last_pre_cycle >= t.t_rp && now >= s.busy_until;
    case CommandKind::REF:
      return precharged && now - s.last_act_cycle >= t.t_rc && now - s.last_pre_cycle >= t.t_rp &&
             now >= s.busy_until;
    case CommandKind::PRE:
      return !precharged && now - s.last_act_cycle >= t.t_ras;
    case CommandKind::RD:
    case CommandKind::WR:
      return !precharged && *s.open_row == cmd.target.row && now - s.last_act_cycle >= t.t_rcd;
  }
  return false;
}

void apply(BankState& s, const Command& cmd, Cycle now, const BankTiming& t) {
  if (!timing_allows(s, cmd, now, t)) {
    throw ProtocolViolation(std::string(to_string(cmd.kind)) + " to row " +
                            std::to_string(cmd.target.row) + " violates timing at cycle " +
                            std::to_string(now));
  }
  switch (cmd.kind) {
    case CommandKind::ACT:
      s.open_row = cmd.target.row;
      s.last_act_cycle = now;
      ++s.act_epoch_[cmd.target.row];
      break;
    case CommandKind::PRE:
      s.open_row.reset();
      s.last_pre_cycle = now;
      break;
    case CommandKind::RD:
    case CommandKind::WR:
      break;
    case CommandKind::REF: {
      const RowRange r = ref_batch_rows(t, cmd.ref_batch);
      for (std::uint32_t row = r.first; row < r.last; ++row) s.last_refresh_[row] = now;
      s.busy_until = now + t.ref_busy;
      break;
    }
    case CommandKind::MitigationREF:
      // Internal ACT+PRE of the victim row: one full row cycle.
      s.last_refresh_[cmd.target.row] = now;
      s.last_act_cycle = now;
      s.busy_until = now + t.t_rc;
      break;
  }
}

bool refresh_due(Cycle t_refi, Cycle now, Cycle last_ref_cycle) {
  return now - last_ref_cycle >= t_refi;
}

bool refresh_due(const DramConfig& cfg, Cycle now, Cycle last_ref_cycle) {
  return refresh_due(cfg.t_refi(), now, last_ref_cycle);
}

}  // namespace rhsim::dram

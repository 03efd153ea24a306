#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rhsim/common.hpp"

namespace rhsim::dram {

enum class DramType { DDR3, DDR4, LPDDR4 };

std::string_view to_string(DramType t);
DramType dram_type_from_string(std::string_view s);

/// Geometry and timing of one simulated DRAM system. Defaults reproduce a
/// 1-channel, 1-rank DDR4 system with 16 banks of 16k rows.
struct DramConfig {
  DramType dram_type = DramType::DDR4;

  double t_rc_ns = 50.0;
  double t_ras_ns = 32.0;
  double t_rp_ns = 13.32;
  double t_rcd_ns = 13.32;
  double t_cl_ns = 13.32;
  std::uint32_t t_bl_cycles = 4;
  double t_refw_ms = 64.0;
  double t_refi_us = 7.8125;
  /// Bank occupancy of one REF command, in units of t_rc.
  std::uint32_t ref_busy_trc = 1;

  std::uint32_t channels = 1;
  std::uint32_t ranks = 1;
  std::uint32_t bank_groups = 4;
  std::uint32_t banks_per_group = 4;
  std::uint32_t rows_per_bank = 16384;
  std::uint32_t row_size_bytes = 8192;
  std::uint32_t clock_freq_mhz = 1200;

  /// Defaults for a DRAM standard: t_rc of 52.5/50/60 ns and a typical
  /// clock for each type.
  static DramConfig defaults_for(DramType t);

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  std::uint32_t banks_per_rank() const { return bank_groups * banks_per_group; }
  std::uint32_t total_banks() const { return channels * ranks * banks_per_rank(); }
  std::uint64_t capacity_bytes() const {
    return std::uint64_t{total_banks()} * rows_per_bank * row_size_bytes;
  }

  /// Number of REF commands per refresh window (8192 with the defaults).
  std::uint64_t refs_per_window() const;
  /// Rows covered by a single REF command, rounded up.
  std::uint32_t rows_per_ref() const;

  /// ns -> cycles, rounded up.
  Cycle ns_to_cycles(double ns) const;
  double cycles_to_ns(Cycle c) const;

  Cycle t_rc() const { return ns_to_cycles(t_rc_ns); }
  Cycle t_ras() const { return ns_to_cycles(t_ras_ns); }
  Cycle t_rp() const { return ns_to_cycles(t_rp_ns); }
  Cycle t_rcd() const { return ns_to_cycles(t_rcd_ns); }
  Cycle t_cl() const { return ns_to_cycles(t_cl_ns); }
  Cycle t_bl() const { return t_bl_cycles; }
  Cycle t_refi() const { return ns_to_cycles(t_refi_us * 1000.0); }
  Cycle t_refw() const { return ns_to_cycles(t_refw_ms * 1.0e6); }
  Cycle ref_busy() const { return t_rc() * ref_busy_trc; }
};

}  // namespace rhsim::dram

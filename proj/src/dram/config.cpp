#include "rhsim/dram/config.hpp"

#include <cmath>

namespace rhsim::dram {

std::string_view to_string(DramType t) {
  switch (t) {
    case DramType::DDR3: return "DDR3";
    case DramType::DDR4: return "DDR4";
    case DramType::LPDDR4: return "LPDDR4";
  }
  return "?";
}

DramType dram_type_from_string(std::string_view s) {
  if (s == "DDR3") return DramType::DDR3;
  if (s == "DDR4") return DramType::DDR4;
  if (s == "LPDDR4") return DramType::LPDDR4;
  throw ConfigError("unknown dram_type '" + std::string(s) + "'");
}

DramConfig DramConfig::defaults_for(DramType t) {
  DramConfig c;
  c.dram_type = t;
  switch (t) {
    case DramType::DDR3:  // DDR3-1600
      c.clock_freq_mhz = 800;
      c.t_rc_ns = 52.5;
      c.t_ras_ns = 35.0;
      c.t_rp_ns = c.t_rcd_ns = c.t_cl_ns = 13.75;
      c.t_bl_cycles = 4;
      break;
    case DramType::DDR4:  // DDR4-2400
      break;
    case DramType::LPDDR4:  // LPDDR4-3200
      c.clock_freq_mhz = 1600;
      c.t_rc_ns = 60.0;
      c.t_ras_ns = 41.0;
      c.t_rp_ns = 18.0;
      c.t_rcd_ns = 18.0;
      c.t_cl_ns = 17.5;
      c.t_bl_cycles = 8;
      break;
  }
  return c;
}

void DramConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid DramConfig: ") + what);
  };
  require(t_rc_ns > 0, "t_rc must be positive");
  require(t_ras_ns > 0 && t_rp_ns > 0 && t_rcd_ns > 0 && t_cl_ns > 0,
          "row/column timings must be positive");
  require(t_ras() + t_rp() <= t_rc(), "t_ras + t_rp must not exceed t_rc");
  require(t_refw_ms > 0 && t_refi_us > 0, "refresh timings must be positive");
  require(t_refi() <= t_refw(), "t_refi must not exceed t_refw");
  require(channels > 0 && ranks > 0 && bank_groups > 0 && banks_per_group > 0,
          "organization counts must be positive");
  require(rows_per_bank >= 2, "rows_per_bank must be >= 2");
  require(row_size_bytes >= 64 && row_size_bytes % 64 == 0,
          "row_size_bytes must be a positive multiple of 64");
  require(clock_freq_mhz > 0, "clock_freq_mhz must be positive");
  require(ref_busy_trc > 0, "ref_busy_trc must be positive");
}

std::uint64_t DramConfig::refs_per_window() const {
  return static_cast<std::uint64_t>(std::llround(t_refw_ms * 1000.0 / t_refi_us));
}

std::uint32_t DramConfig::rows_per_ref() const {
  const auto n = refs_per_window();
  return static_cast<std::uint32_t>((rows_per_bank + n - 1) / n);
}

Cycle DramConfig::ns_to_cycles(double ns) const {
  // Tolerate binary rounding noise before taking the ceiling.
  const double exact = ns * clock_freq_mhz / 1000.0;
  return static_cast<Cycle>(std::ceil(exact - 1e-9));
}

double DramConfig::cycles_to_ns(Cycle c) const {
  return static_cast<double>(c) * 1000.0 / clock_freq_mhz;
}

}  // namespace rhsim::dram

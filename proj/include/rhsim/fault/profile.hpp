#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"
#include "rhsim/fault/pattern.hpp"

namespace rhsim::fault {

enum class CellSide { double_sided, single_upper, single_lower };

std::string_view to_string(CellSide s);
CellSide side_for_offset(int offset);

/// A cell that flips once the aggressor pair around its victim wordline has
/// been hammered `threshold` times without an intervening refresh of the
/// cell's own row.
struct VulnerableCell {
  std::uint32_t row = 0;        // logical row holding the cell
  std::uint32_t bit_index = 0;  // bit within the row
  std::uint32_t threshold = 0;
  PatternSet patterns;
  /// Wordline distance from the victim whose two aggressors disturb this
  /// cell: 0 for the victim itself, +-2/4/6 for cells further out.
  int offset = 0;
  CellSide side = CellSide::double_sided;
};

/// Parameters from which a profile is generated deterministically.
struct ProfileSpec {
  std::string label;         // e.g. "LPDDR4-1y/MfrA"
  std::string type_node;     // e.g. "LPDDR4-1y"
  std::string manufacturer;  // e.g. "A"
  dram::DramType dram_type = dram::DramType::DDR4;

  std::uint32_t hc_first_min = 10000;
  /// Exponent of flips(HC) = c * HC^k. Zero means: derive it so that the
  /// flip rate at hc_star equals anchor_rate.
  double rate_exp = 0.0;
  double anchor_rate = 1e-6;
  /// Zero means min(4 * hc_first_min, sweep_cap), or 4 * hc_first_min when
  /// the minimum is already above the cap.
  std::uint32_t hc_star = 0;
  std::uint32_t sweep_cap = 150000;

  std::uint32_t rows = 1024;
  std::uint32_t row_size_bytes = 8192;

  /// Victim-relative wordline offset -> probability. Keys are even, in
  /// [-6, 6].
  std::map<int, double> offset_weights = {{-2, 0.1}, {0, 0.8}, {2, 0.1}};

  DataPattern worst_pattern = DataPattern::RS0;
  double worst_pattern_prob = 0.85;
  double other_pattern_prob = 0.3;
  /// Probability that a new cell lands in the 64-bit word of an earlier one.
  double clustering = 0.15;
  /// Caps the number of generated cells; zero means no cap.
  std::uint64_t max_cells = 0;

  dram::MappingKind mapping_kind = dram::MappingKind::Identity;
  std::uint32_t pair_phase = 0;
  std::uint64_t mapping_seed = 0;

  bool on_die_ecc = false;
  /// Single-sided hammers needed before one aggressor alone starts to count.
  std::uint32_t single_sided_onset = 160000;
  /// Relative standard deviation of per-iteration threshold noise.
  double threshold_jitter = 0.0;
  std::uint64_t seed = 1;
  double temperature_c = 50.0;
  std::vector<std::string> notes;

  /// Throws ConfigError on inconsistent parameters.
  void validate() const;
};

struct VulnerabilityProfile {
  ProfileSpec spec;
  double rate_coeff = 0.0;
  double rate_exp = 0.0;
  std::uint32_t hc_star = 0;
  /// Ascending threshold; cells[0].threshold == hc_first_min.
  std::vector<VulnerableCell> cells;

  const std::string& label() const { return spec.label; }
  std::uint32_t hc_first_min() const { return spec.hc_first_min; }
  std::uint64_t bits_per_row() const { return std::uint64_t{spec.row_size_bytes} * 8; }
  std::uint64_t total_bits() const { return bits_per_row() * spec.rows; }
  dram::RowMapping mapping() const;
  /// Timing used to bound characterization loops.
  dram::DramConfig dram_config() const;
};

/// Throws InfeasibleError when the requested curve needs more cells than
/// the chip holds.
VulnerabilityProfile generate_profile(const ProfileSpec& spec);

/// c * hc^k / total_bits clamped to [0, 1]; zero below hc_first_min.
double expected_flip_rate(const VulnerabilityProfile& profile, double hc);

/// Number of cells with threshold <= hc.
std::uint64_t cells_at_or_below(const VulnerabilityProfile& profile, std::uint64_t hc);

struct PowerLawFit {
  double c = 0.0;
  double k = 0.0;
  double r2 = 0.0;
};

/// Least squares on (log x, log y). Points with y <= 0 are skipped.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

/// One spec per measured type-node/manufacturer, with its lowest observed
/// HC_first.
std::vector<ProfileSpec> bundled_profile_specs();
ProfileSpec bundled_profile_spec(const std::string& label);

}  // namespace rhsim::fault

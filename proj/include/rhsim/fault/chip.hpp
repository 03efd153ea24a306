#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <set>
#include <tuple>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"
#include "rhsim/fault/ecc.hpp"
#include "rhsim/fault/pattern.hpp"
#include "rhsim/fault/profile.hpp"

namespace rhsim::fault {

struct FlipRecord {
  DataPattern data_pattern = DataPattern::SO0;
  std::uint32_t hc = 0;
  std::uint32_t row = 0;
  std::uint32_t bit_index = 0;
  std::uint8_t observed_value = 0;
  /// Victim row of the test that produced the flip.
  std::uint32_t victim = 0;

  auto key() const { return std::make_tuple(data_pattern, hc, row, bit_index); }
  friend bool operator<(const FlipRecord& a, const FlipRecord& b) { return a.key() < b.key(); }
  friend bool operator==(const FlipRecord& a, const FlipRecord& b) { return a.key() == b.key(); }
};

struct ReadFlip {
  std::uint32_t bit_index = 0;
  std::uint8_t observed_value = 0;
  friend bool operator==(const ReadFlip&, const ReadFlip&) = default;
};

/// Hammer exposure and stored data of one simulated bank.
///
/// Each wordline keeps, for the wordlines at relative distance +-1, +-3,
/// +-5 and +-7, the number of activations since the wordline itself was
/// last refreshed or activated. A cell with victim offset o is disturbed by
/// the wordlines at -o-1 and -o+1 relative to its own.
class ChipState {
 public:
  explicit ChipState(std::shared_ptr<const VulnerabilityProfile> profile);

  const VulnerabilityProfile& profile() const { return *profile_; }
  const dram::RowMapping& mapping() const { return mapping_; }
  std::uint32_t rows() const { return mapping_.rows(); }

  /// Writes `dp` to the whole bank, aligned so `victim` gets the base byte.
  void write_pattern(DataPattern dp, std::uint32_t victim);
  DataPattern pattern_of(std::uint32_t row) const;
  std::uint8_t stored_bit(std::uint32_t row, std::uint32_t bit) const;

  /// `count` back-to-back activations of one row.
  void activate(std::uint32_t row, std::uint64_t count = 1);
  /// `count` rounds of (ACT a, ACT b); same end state as the explicit loop.
  void activate_pair(std::uint32_t a, std::uint32_t b, std::uint64_t count);
  /// Refreshes the wordline holding `row`.
  void refresh_row(std::uint32_t row);
  void refresh_all();

  /// Effective double-sided hammer count seen by a cell.
  std::uint64_t exposure(const VulnerableCell& cell) const;
  /// Raw (pre-ECC) flipped bits of a row under the current data pattern.
  std::vector<std::uint32_t> raw_flips(std::uint32_t row, std::uint32_t iteration = 0) const;
  /// System-visible flips after on-die ECC, sorted by bit.
  std::vector<ReadFlip> read_row(std::uint32_t row, std::uint32_t iteration = 0) const;
  /// Rewrites the stored data of a row, which also clears its exposure.
  void restore_row(std::uint32_t row) { refresh_row(row); }

  std::uint64_t activation_count() const { return activations_; }

 private:
  static constexpr int kSlots = 8;
  static int slot(int rel) { return (rel + 7) / 2; }
  std::uint32_t effective_threshold(std::uint32_t cell_index, std::uint32_t iteration) const;

  std::shared_ptr<const VulnerabilityProfile> profile_;
  dram::RowMapping mapping_;
  SecCode ecc_;
  std::vector<std::array<std::uint64_t, kSlots>> exposure_;
  std::vector<std::vector<std::uint32_t>> cells_by_row_;
  DataPattern pattern_ = DataPattern::SO0;
  std::uint32_t pattern_ref_wordline_ = 0;
  std::uint64_t activations_ = 0;
};

/// Core hammer loop against a chip: writes `dp` around `victim`, hammers
/// its two aggressors `hc` times (one aggressor at bank edges) and returns
/// the visible flips within +-7 wordlines. Throws RangeError when the loop
/// would exceed 32 ms at the profile's t_rc.
std::set<FlipRecord> hammer(ChipState& chip, std::uint32_t victim, std::uint32_t hc,
                            DataPattern dp);

/// True iff `acts` back-to-back activations fit in 32 ms at t_rc.
bool fits_core_loop(const dram::DramConfig& cfg, std::uint64_t acts);

}  // namespace rhsim::fault

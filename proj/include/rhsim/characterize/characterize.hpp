#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rhsim/characterize/chip.hpp"
#include "rhsim/dram/mapping.hpp"
#include "rhsim/fault/pattern.hpp"

namespace rhsim::characterize {

struct Flip {
  fault::DataPattern data_pattern = fault::DataPattern::SO0;
  std::uint32_t hc = 0;
  std::uint32_t row = 0;
  std::uint32_t bit = 0;
  std::uint32_t iteration = 0;
  std::uint8_t observed_value = 0;
  std::uint32_t victim = 0;

  auto key() const { return std::make_tuple(data_pattern, hc, row, bit, iteration); }
  friend bool operator<(const Flip& a, const Flip& b) { return a.key() < b.key(); }
  friend bool operator==(const Flip& a, const Flip& b) { return a.key() == b.key(); }
};

struct RunMetadata {
  std::string profile_label;
  std::vector<fault::DataPattern> patterns;
  std::vector<std::uint32_t> hc_sweep;
  std::uint32_t iterations = 1;
  std::uint64_t seed = 0;
};

/// Append-only set of observed flips plus the parameters of the run.
class FlipDatabase {
 public:
  RunMetadata meta;

  /// Returns false when an equal key is already present.
  bool add(const Flip& f) { return flips_.insert(f).second; }
  void merge(const FlipDatabase& other) { flips_.insert(other.flips_.begin(), other.flips_.end()); }
  const std::set<Flip>& flips() const { return flips_; }
  std::size_t size() const { return flips_.size(); }
  bool empty() const { return flips_.empty(); }

  /// Columns: pattern,hc,row,bit,iteration.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;

 private:
  std::set<Flip> flips_;
};

struct CharacterizationOptions {
  std::vector<fault::DataPattern> patterns{fault::kAllPatterns.begin(), fault::kAllPatterns.end()};
  std::vector<std::uint32_t> hc_sweep;
  /// Victim rows [first_row, last_row); last_row 0 means every row.
  std::uint32_t first_row = 0;
  std::uint32_t last_row = 0;
  std::uint32_t iterations = 1;
  /// Logical-to-physical hypothesis used to pick aggressors. Identity when
  /// empty.
  std::optional<dram::RowMapping> mapping;
  std::string profile_label;
  std::uint64_t seed = 0;
};

/// Core test loop: for every pattern, victim row and hammer count, disable
/// refresh, refresh the victim, hammer both physical neighbors, re-enable
/// refresh, record the flips and restore the rows. Throws RangeError if a
/// hammer count does not fit the 32 ms core-loop bound.
FlipDatabase run_characterization(ChipPort& chip, const CharacterizationOptions& opts);

/// One iteration of the test loop for a single victim; returns the visible flips.
std::vector<Flip> test_row(ChipPort& chip, const dram::RowMapping& mapping, std::uint32_t victim,
                           std::uint32_t hc, fault::DataPattern dp, std::uint32_t iteration = 0);

/// Fraction of all distinct flipping cells that `dp` exposes. Throws
/// RangeError when the database holds no flips.
double coverage(const FlipDatabase& db, fault::DataPattern dp);

struct HcSearchOptions {
  std::vector<fault::DataPattern> patterns{fault::kAllPatterns.begin(), fault::kAllPatterns.end()};
  /// Restricts the search to one victim row.
  std::optional<std::uint32_t> row;
  std::uint32_t step = 100;
  /// Spacing of the coarse pass before binary refinement.
  std::uint32_t coarse_step = 5000;
  std::uint32_t cap = 150000;
  std::optional<dram::RowMapping> mapping;
};

struct HcFirstResult {
  bool rowhammerable = false;
  /// Smallest multiple of `step` that produced a flip.
  std::uint32_t hc = 0;
  std::uint64_t tests = 0;
};

/// Coarse sweep followed by binary search; assumes flips are monotone in HC.
HcFirstResult find_hc_first(ChipPort& chip, const HcSearchOptions& opts = {});

struct NthWordResult {
  std::uint32_t n = 1;
  std::optional<std::uint32_t> hc;
  /// hc_n / hc_(n-1), when both are reachable and n > 1.
  std::optional<double> multiplier;
};

/// Smallest HC at which some aligned word holds at least n flips. Throws
/// UnsupportedConfig for chips with on-die ECC.
NthWordResult hc_nth_word(ChipPort& chip, std::uint32_t n, std::uint32_t word_bits = 64,
                          const HcSearchOptions& opts = {});

/// Physical distance of flips from their victim -> fraction of flips.
/// Restricted to one hammer count when `hc` is set.
std::map<int, double> spatial_histogram(const FlipDatabase& db, const dram::RowMapping& mapping,
                                        std::optional<std::uint32_t> hc = std::nullopt);

/// Flips per aligned word -> fraction of words with at least one flip.
std::map<std::uint32_t, double> word_multiplicity(const FlipDatabase& db, std::uint32_t hc,
                                                  std::uint32_t word_bits = 64);

/// hc -> distinct flipped cells / total bits.
std::map<std::uint32_t, double> flip_rate_curve(const FlipDatabase& db, std::uint64_t total_bits);

/// Hammer count at which the profile's rate curve reaches `rate`.
std::uint32_t calibration_hc(const fault::VulnerabilityProfile& profile, double rate = 1e-6);

struct MonotonicOptions {
  std::vector<std::uint32_t> hc_sweep;  // 25k..150k step 5k when empty
  std::uint32_t iterations = 20;
  std::vector<fault::DataPattern> patterns;  // every pattern when empty
  std::uint32_t first_row = 0;
  std::uint32_t last_row = 0;
  std::optional<dram::RowMapping> mapping;
};

struct MonotonicResult {
  double percent = 100.0;
  std::uint64_t cells = 0;
  std::uint64_t monotonic_cells = 0;
};

/// Share of flipping cells whose flip frequency over the iterations never
/// decreases as HC grows.
MonotonicResult monotonic_fraction(ChipPort& chip, const MonotonicOptions& opts = {});

struct MappingHypothesis {
  dram::MappingKind kind = dram::MappingKind::Identity;
  std::uint32_t pair_phase = 0;
  /// Full mapping when it could be determined.
  std::optional<dram::RowMapping> mapping;
  /// Probed row -> rows inferred to be physically adjacent.
  std::map<std::uint32_t, std::vector<std::uint32_t>> neighbors;
  std::vector<std::uint32_t> inconclusive;
  /// Share of probed rows consistent with `kind`.
  double agreement = 0.0;
};

struct ReverseOptions {
  /// Rows to probe; every row when empty.
  std::vector<std::uint32_t> rows;
  std::vector<fault::DataPattern> patterns{fault::kAllPatterns.begin(), fault::kAllPatterns.end()};
  /// Single-sided activations per probe; the longest loop under 32 ms when 0.
  std::uint64_t activations = 0;
};

/// Hammers each probed row alone and ranks the other rows by flip count;
/// the most-flipped rows are its physical neighbors.
MappingHypothesis reverse_engineer_mapping(ChipPort& chip, const ReverseOptions& opts = {});

/// Seconds to hammer every row of a chip once, `per_row_seconds` each.
double profiling_time_estimate(double capacity_bytes, double row_size_bytes, double per_row_seconds);

}  // namespace rhsim::characterize

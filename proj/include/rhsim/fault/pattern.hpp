#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rhsim::fault {

/// Data patterns written before hammering. Row-alternating patterns store
/// the inverse byte in every other row.
enum class DataPattern : std::uint8_t { SO0, SO1, CO0, CO1, CH0, CH1, RS0, RS1 };

inline constexpr std::size_t kPatternCount = 8;
inline constexpr std::array<DataPattern, kPatternCount> kAllPatterns = {
    DataPattern::SO0, DataPattern::SO1, DataPattern::CO0, DataPattern::CO1,
    DataPattern::CH0, DataPattern::CH1, DataPattern::RS0, DataPattern::RS1};

std::string_view to_string(DataPattern p);
/// Accepts short names (RS0) and long names (RowStripe0).
DataPattern pattern_from_string(std::string_view s);

/// Byte stored in a row at even distance from the reference (victim) row.
std::uint8_t pattern_byte(DataPattern p);
bool is_row_alternating(DataPattern p);
/// CH0 <-> CH1, RS0 <-> RS1; uniform patterns map to themselves.
DataPattern alternate(DataPattern p);
/// Pattern seen by `row` when `p` is written relative to `victim`.
DataPattern row_pattern(DataPattern p, std::int64_t row, std::int64_t victim);

/// Bit set over the eight patterns.
class PatternSet {
 public:
  constexpr PatternSet() = default;
  constexpr explicit PatternSet(std::uint8_t bits) : bits_(bits) {}
  static constexpr PatternSet all() { return PatternSet(0xff); }

  bool contains(DataPattern p) const { return bits_ >> static_cast<int>(p) & 1u; }
  void insert(DataPattern p) { bits_ |= static_cast<std::uint8_t>(1u << static_cast<int>(p)); }
  void erase(DataPattern p) { bits_ &= static_cast<std::uint8_t>(~(1u << static_cast<int>(p))); }
  bool empty() const { return bits_ == 0; }
  int size() const { return __builtin_popcount(bits_); }
  std::uint8_t bits() const { return bits_; }
  std::vector<DataPattern> members() const;

  friend bool operator==(PatternSet, PatternSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

}  // namespace rhsim::fault

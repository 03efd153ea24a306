#include "rhsim/fault/pattern.hpp"

#include "rhsim/common.hpp"

namespace rhsim::fault {

namespace {
constexpr std::array<std::string_view, kPatternCount> kShort = {"SO0", "SO1", "CO0", "CO1",
                                                               "CH0", "CH1", "RS0", "RS1"};
constexpr std::array<std::string_view, kPatternCount> kLong = {
    "Solid0",     "Solid1",     "ColStripe0", "ColStripe1",
    "Checkered0", "Checkered1", "RowStripe0", "RowStripe1"};
constexpr std::array<std::uint8_t, kPatternCount> kBytes = {0x00, 0xff, 0x55, 0xaa,
                                                           0x55, 0xaa, 0x00, 0xff};
}  // namespace

std::string_view to_string(DataPattern p) { return kShort[static_cast<int>(p)]; }

DataPattern pattern_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kPatternCount; ++i) {
    if (s == kShort[i] || s == kLong[i]) return static_cast<DataPattern>(i);
  }
  throw ConfigError("unknown data pattern '" + std::string(s) + "'");
}

std::uint8_t pattern_byte(DataPattern p) { return kBytes[static_cast<int>(p)]; }

bool is_row_alternating(DataPattern p) { return static_cast<int>(p) >= 4; }

DataPattern alternate(DataPattern p) {
  if (!is_row_alternating(p)) return p;
  return static_cast<DataPattern>(static_cast<int>(p) ^ 1);
}

DataPattern row_pattern(DataPattern p, std::int64_t row, std::int64_t victim) {
  return ((row - victim) & 1) ? alternate(p) : p;
}

std::vector<DataPattern> PatternSet::members() const {
  std::vector<DataPattern> out;
  for (auto p : kAllPatterns) {
    if (contains(p)) out.push_back(p);
  }
  return out;
}

}  // namespace rhsim::fault

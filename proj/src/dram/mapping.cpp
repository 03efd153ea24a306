#include "rhsim/dram/mapping.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace rhsim::dram {

std::string_view to_string(MappingKind k) {
  switch (k) {
    case MappingKind::Identity: return "Identity";
    case MappingKind::PairedWordline: return "PairedWordline";
    case MappingKind::Permuted: return "Permuted";
  }
  return "?";
}

MappingKind mapping_kind_from_string(std::string_view s) {
  if (s == "Identity") return MappingKind::Identity;
  if (s == "PairedWordline") return MappingKind::PairedWordline;
  if (s == "Permuted") return MappingKind::Permuted;
  throw ConfigError("unknown mapping kind '" + std::string(s) + "'");
}

RowMapping RowMapping::identity(std::uint32_t rows) {
  if (rows < 2) throw RangeError("a bank needs at least two rows");
  RowMapping m;
  m.kind_ = MappingKind::Identity;
  m.rows_ = rows;
  m.wordlines_ = rows;
  return m;
}

RowMapping RowMapping::paired_wordline(std::uint32_t rows, std::uint32_t phase) {
  if (rows < 4) throw RangeError("paired wordlines need at least four rows");
  if (phase > 1) throw RangeError("pair phase must be 0 or 1");
  RowMapping m;
  m.kind_ = MappingKind::PairedWordline;
  m.rows_ = rows;
  m.phase_ = phase;
  m.wordlines_ = (rows + phase + 1) / 2;
  return m;
}

RowMapping RowMapping::permuted(std::uint32_t rows, std::uint64_t seed) {
  if (rows < 2) throw RangeError("a bank needs at least two rows");
  std::vector<std::uint32_t> table(rows);
  std::iota(table.begin(), table.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::uint32_t i = rows - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(uniform_below(rng, i + 1));
    std::swap(table[i], table[j]);
  }
  RowMapping m = from_table(std::move(table));
  m.seed_ = seed;
  return m;
}

RowMapping RowMapping::from_table(std::vector<std::uint32_t> logical_to_wordline) {
  const auto rows = static_cast<std::uint32_t>(logical_to_wordline.size());
  if (rows < 2) throw RangeError("a bank needs at least two rows");
  std::vector<std::uint32_t> inverse(rows, rows);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const auto w = logical_to_wordline[r];
    if (w >= rows || inverse[w] != rows) throw RangeError("mapping table is not a bijection");
    inverse[w] = r;
  }
  RowMapping m;
  m.kind_ = MappingKind::Permuted;
  m.rows_ = rows;
  m.wordlines_ = rows;
  m.forward_ = std::make_shared<const std::vector<std::uint32_t>>(std::move(logical_to_wordline));
  m.inverse_ = std::make_shared<const std::vector<std::uint32_t>>(std::move(inverse));
  return m;
}

void RowMapping::check_row(std::uint32_t logical) const {
  if (logical >= rows_) {
    throw RangeError("row " + std::to_string(logical) + " out of range [0, " +
                     std::to_string(rows_) + ")");
  }
}

std::uint32_t RowMapping::first_row(std::uint32_t wordline) const {
  const std::int64_t first = 2 * std::int64_t{wordline} - phase_;
  return static_cast<std::uint32_t>(std::max<std::int64_t>(first, 0));
}

PhysicalRow RowMapping::to_physical(std::uint32_t logical) const {
  check_row(logical);
  switch (kind_) {
    case MappingKind::Identity: return {logical, 0};
    case MappingKind::PairedWordline: {
      const std::uint32_t w = (logical + phase_) / 2;
      return {w, logical - first_row(w)};
    }
    case MappingKind::Permuted: return {(*forward_)[logical], 0};
  }
  return {};
}

std::uint32_t RowMapping::to_logical(PhysicalRow p) const {
  if (p.wordline >= wordlines_ || p.slot >= rows_on_wordline(p.wordline)) {
    throw RangeError("physical row out of range");
  }
  switch (kind_) {
    case MappingKind::Identity: return p.wordline;
    case MappingKind::PairedWordline: return first_row(p.wordline) + p.slot;
    case MappingKind::Permuted: return (*inverse_)[p.wordline];
  }
  return 0;
}

std::uint32_t RowMapping::rows_on_wordline(std::uint32_t wordline) const {
  if (kind_ != MappingKind::PairedWordline) return 1;
  const std::int64_t first = 2 * std::int64_t{wordline} - phase_;
  const std::int64_t lo = std::max<std::int64_t>(first, 0);
  const std::int64_t hi = std::min<std::int64_t>(first + 2, rows_);
  return static_cast<std::uint32_t>(std::max<std::int64_t>(hi - lo, 0));
}

std::uint32_t RowMapping::canonical_row(std::uint32_t wordline) const {
  if (wordline >= wordlines_) throw RangeError("wordline out of range");
  if (kind_ != MappingKind::PairedWordline) return to_logical({wordline, 0});
  const std::uint32_t first = first_row(wordline);
  if (rows_on_wordline(wordline) == 2 && first % 2 == 1) return first + 1;
  return first;
}

NeighborList RowMapping::adjacent_rows(std::uint32_t row, std::uint32_t max_distance) const {
  check_row(row);
  if (max_distance < 1) throw RangeError("max_distance must be >= 1");
  if (2 * max_distance > NeighborList::kCapacity) throw RangeError("max_distance too large");
  const std::int64_t w = to_physical(row).wordline;
  NeighborList out;
  for (std::int64_t d = -static_cast<std::int64_t>(max_distance); d <= max_distance; ++d) {
    if (d == 0) continue;
    const std::int64_t nw = w + d;
    if (nw < 0 || nw >= wordlines_) continue;
    out.push_back({static_cast<int>(d), canonical_row(static_cast<std::uint32_t>(nw))});
  }
  return out;
}

std::string RowMapping::describe() const {
  std::string s(to_string(kind_));
  if (kind_ == MappingKind::PairedWordline) s += "(phase=" + std::to_string(phase_) + ")";
  if (seed_) s += "(seed=" + std::to_string(*seed_) + ")";
  return s;
}

}  // namespace rhsim::dram

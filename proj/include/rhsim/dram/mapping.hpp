#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rhsim/common.hpp"

namespace rhsim::dram {

enum class MappingKind { Identity, PairedWordline, Permuted };

std::string_view to_string(MappingKind k);
MappingKind mapping_kind_from_string(std::string_view s);

/// Location of a logical row inside the array: the internal wordline it
/// lives on and its slot on that wordline (always 0 unless two logical rows
/// share a wordline).
struct PhysicalRow {
  std::uint32_t wordline = 0;
  std::uint32_t slot = 0;
  friend bool operator==(const PhysicalRow&, const PhysicalRow&) = default;
};

struct Neighbor {
  int offset = 0;          // physical distance, signed
  std::uint32_t row = 0;   // logical row
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Small fixed-capacity list returned by adjacent_rows(); avoids heap traffic
/// on the per-activation path.
class NeighborList {
 public:
  static constexpr std::size_t kCapacity = 16;

  void push_back(Neighbor n) {
    if (size_ == kCapacity) throw RangeError("NeighborList capacity exceeded");
    items_[size_++] = n;
  }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const Neighbor& operator[](std::size_t i) const { return items_[i]; }
  const Neighbor* begin() const { return items_.data(); }
  const Neighbor* end() const { return items_.data() + size_; }

 private:
  std::array<Neighbor, kCapacity> items_{};
  std::size_t size_ = 0;
};

/// Logical (memory-controller visible) to physical (wordline) row remapping
/// inside one bank. Immutable after construction; cheap to copy.
class RowMapping {
 public:
  static RowMapping identity(std::uint32_t rows);
  /// Logical rows 2k+phase and 2k+1+phase share wordline k (+phase).
  static RowMapping paired_wordline(std::uint32_t rows, std::uint32_t phase = 0);
  /// Deterministic pseudo-random bijection derived from `seed`.
  static RowMapping permuted(std::uint32_t rows, std::uint64_t seed);
  /// Explicit logical -> wordline bijection, e.g. a reverse-engineered one.
  static RowMapping from_table(std::vector<std::uint32_t> logical_to_wordline);

  MappingKind kind() const { return kind_; }
  std::uint32_t rows() const { return rows_; }
  std::uint32_t wordlines() const { return wordlines_; }
  std::uint32_t pair_phase() const { return phase_; }
  std::optional<std::uint64_t> seed() const { return seed_; }

  PhysicalRow to_physical(std::uint32_t logical) const;
  std::uint32_t to_logical(PhysicalRow p) const;
  std::uint32_t wordline(std::uint32_t logical) const { return to_physical(logical).wordline; }

  /// Logical rows stored on a wordline (one, or two for paired wordlines).
  std::uint32_t rows_on_wordline(std::uint32_t wordline) const;
  /// The logical row used to activate a wordline. For paired wordlines this
  /// is the even row of the pair.
  std::uint32_t canonical_row(std::uint32_t wordline) const;

  /// Logical rows whose wordline is within +-max_distance of `row`'s
  /// wordline, excluding distance 0. One canonical row per wordline, ordered
  /// by offset. Throws RangeError for an out-of-range row.
  NeighborList adjacent_rows(std::uint32_t row, std::uint32_t max_distance) const;

  /// Logical -> wordline table for permuted/explicit mappings.
  const std::vector<std::uint32_t>* table() const { return forward_.get(); }

  std::string describe() const;

 private:
  RowMapping() = default;
  void check_row(std::uint32_t logical) const;
  std::uint32_t first_row(std::uint32_t wordline) const;

  MappingKind kind_ = MappingKind::Identity;
  std::uint32_t rows_ = 0;
  std::uint32_t wordlines_ = 0;
  std::uint32_t phase_ = 0;
  std::optional<std::uint64_t> seed_;
  std::shared_ptr<const std::vector<std::uint32_t>> forward_;
  std::shared_ptr<const std::vector<std::uint32_t>> inverse_;
};

/// Free-function form of RowMapping::adjacent_rows.
inline NeighborList adjacent_rows(const RowMapping& mapping, std::uint32_t row,
                                  std::uint32_t max_distance) {
  return mapping.adjacent_rows(row, max_distance);
}

}  // namespace rhsim::dram

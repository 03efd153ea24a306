#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace rhsim::workload {

struct CacheConfig {
  std::uint64_t size_bytes = 16ull << 20;
  std::uint32_t ways = 8;
  std::uint32_t line_bytes = 64;
};

struct CacheAccess {
  bool hit = false;
  /// Line address of a dirty victim that must be written back.
  std::optional<std::uint64_t> writeback;
};

/// Set-associative write-back, write-allocate cache with LRU replacement.
class Cache {
 public:
  explicit Cache(CacheConfig cfg = {});

  CacheAccess access(std::uint64_t address, bool write);
  bool contains(std::uint64_t address) const;

  const CacheConfig& config() const { return cfg_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  void reset_stats() { hits_ = misses_ = 0; }

 private:
  static constexpr std::uint64_t kValid = 1ull << 63;
  static constexpr std::uint64_t kDirty = 1ull << 62;
  static constexpr std::uint64_t kTagMask = kDirty - 1;

  CacheConfig cfg_;
  std::uint64_t sets_;
  /// Tag plus valid/dirty bits, one contiguous block of `ways` per set.
  std::vector<std::uint64_t> tags_;
  std::vector<std::uint64_t> lru_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace rhsim::workload

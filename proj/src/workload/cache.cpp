#include "rhsim/workload/cache.hpp"

#include "rhsim/common.hpp"

namespace rhsim::workload {

Cache::Cache(CacheConfig cfg) : cfg_(cfg) {
  if (cfg.ways == 0 || cfg.line_bytes == 0 || cfg.size_bytes % (std::uint64_t{cfg.ways} * cfg.line_bytes) != 0) {
    throw ConfigError("cache size must be a multiple of ways * line size");
  }
  sets_ = cfg.size_bytes / (std::uint64_t{cfg.ways} * cfg.line_bytes);
  tags_.assign(sets_ * cfg.ways, 0);
  lru_.assign(sets_ * cfg.ways, 0);
}

bool Cache::contains(std::uint64_t address) const {
  const std::uint64_t line = address / cfg_.line_bytes;
  const std::uint64_t* set = &tags_[(line % sets_) * cfg_.ways];
  const std::uint64_t want = kValid | (line / sets_);
  for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
    if ((set[w] & ~kDirty) == want) return true;
  }
  return false;
}

CacheAccess Cache::access(std::uint64_t address, bool write) {
  const std::uint64_t line = address / cfg_.line_bytes;
  const std::uint64_t set_index = line % sets_;
  const std::uint64_t base = set_index * cfg_.ways;
  std::uint64_t* set = &tags_[base];
  std::uint64_t* lru = &lru_[base];
  const std::uint64_t tag = line / sets_;
  const std::uint64_t want = kValid | tag;
  ++clock_;
  CacheAccess r;
  std::uint32_t victim = 0;
  bool victim_free = false;
  for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
    if ((set[w] & ~kDirty) == want) {
      lru[w] = clock_;
      if (write) set[w] |= kDirty;
      ++hits_;
      r.hit = true;
      return r;
    }
    if (victim_free) continue;
    if (!(set[w] & kValid)) {
      victim = w;
      victim_free = true;
    } else if (lru[w] < lru[victim]) {
      victim = w;
    }
  }
  ++misses_;
  const std::uint64_t old = set[victim];
  if ((old & kValid) && (old & kDirty)) r.writeback = ((old & kTagMask) * sets_ + set_index) * cfg_.line_bytes;
  set[victim] = want | (write ? kDirty : 0);
  lru[victim] = clock_;
  return r;
}

}  // namespace rhsim::workload

#include "rhsim/workload/system.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace rhsim::workload {

namespace {

struct Slot {
  std::uint32_t count = 0;
  bool ready = true;
  bool memory = false;
};

class Core {
 public:
  Core(std::uint32_t id, TracePtr trace, const CoreParams& params, std::uint64_t target, std::uint64_t base,
       std::uint64_t region)
      : id_(id), trace_(std::move(trace)), params_(params), target_(target), base_(base), region_(region),
        slots_(params.window) {
    load_record();
  }

  std::uint64_t physical(std::uint64_t address) const { return base_ + address % region_; }

  /// Replays `instructions` through the LLC without timing.
  void warm(Cache& llc, std::uint64_t instructions) {
    if (trace_->empty()) return;
    std::uint64_t done = 0;
    while (done < instructions) {
      done += std::uint64_t{nonmem_left_} + 1;
      const auto& r = (*trace_)[pos_];
      llc.access(physical(r.address), r.write);
      advance();
    }
  }

  void step(std::uint64_t cpu_cycle, Cache& llc, memctrl::Controller& mc, std::deque<std::uint64_t>& writebacks) {
    retire(cpu_cycle);
    fetch(llc, mc, writebacks);
  }

  void complete(std::uint32_t slot) {
    slots_[slot].ready = true;
    --outstanding_;
  }

  bool done() const { return done_; }
  CoreResult result() const {
    CoreResult r;
    r.instructions = target_;
    r.cycles = done_cycle_;
    r.ipc = done_cycle_ > 0 ? static_cast<double>(target_) / static_cast<double>(done_cycle_) : 0.0;
    r.llc_misses = misses_at_done_;
    r.mpki = 1000.0 * static_cast<double>(misses_at_done_) / static_cast<double>(target_);
    return r;
  }

 private:
  void load_record() {
    nonmem_left_ = trace_->empty() ? std::numeric_limits<std::uint32_t>::max() : (*trace_)[pos_].non_mem;
  }
  void advance() {
    pos_ = (pos_ + 1) % trace_->size();
    load_record();
  }

  void retire(std::uint64_t cpu_cycle) {
    std::uint32_t budget = params_.issue_width;
    while (budget > 0 && size_ > 0) {
      Slot& s = slots_[head_];
      if (!s.ready) break;
      const std::uint32_t take = std::min(budget, s.count);
      s.count -= take;
      budget -= take;
      occupancy_ -= take;
      retired_ += take;
      if (s.count == 0) {
        head_ = (head_ + 1) % slots_.size();
        --size_;
      }
    }
    if (!done_ && retired_ >= target_) {
      done_ = true;
      done_cycle_ = cpu_cycle + 1;
      misses_at_done_ = misses_;
    }
  }

  void push(std::uint32_t count, bool ready, bool memory) {
    if (ready && !memory && size_ > 0) {
      Slot& tail = slots_[(head_ + size_ - 1) % slots_.size()];
      if (tail.ready && !tail.memory) {
        tail.count += count;
        occupancy_ += count;
        return;
      }
    }
    slots_[(head_ + size_) % slots_.size()] = {count, ready, memory};
    ++size_;
    occupancy_ += count;
  }

  void fetch(Cache& llc, memctrl::Controller& mc, std::deque<std::uint64_t>& writebacks) {
    std::uint32_t budget = params_.issue_width;
    while (budget > 0 && occupancy_ < params_.window) {
      if (nonmem_left_ > 0) {
        const std::uint32_t k = std::min({budget, nonmem_left_, params_.window - occupancy_});
        push(k, true, false);
        nonmem_left_ -= k;
        budget -= k;
        continue;
      }
      if (size_ == slots_.size()) break;
      const auto& r = (*trace_)[pos_];
      const std::uint64_t addr = physical(r.address);
      if (!r.write && ((params_.mshrs != 0 && outstanding_ >= params_.mshrs) ||
                       !mc.can_accept(memctrl::RequestKind::Read))) {
        // A miss would have nowhere to go. Lines of this core's region only
        // enter the LLC through this core, so a known miss stays a miss.
        if (!known_miss_) known_miss_ = !llc.contains(addr);
        if (known_miss_) break;
      }
      known_miss_ = false;
      const auto res = llc.access(addr, r.write);
      if (res.writeback) writebacks.push_back(*res.writeback);
      if (res.hit || r.write) {
        push(1, true, true);
      } else {
        ++misses_;
        const auto slot = static_cast<std::uint32_t>((head_ + size_) % slots_.size());
        push(1, false, true);
        ++outstanding_;
        memctrl::Request req;
        req.kind = memctrl::RequestKind::Read;
        req.address = addr;
        req.arrival = mc.now();
        req.core_id = id_;
        req.tag = slot;
        mc.enqueue(req);
      }
      if (!res.hit && r.write) ++misses_;
      --budget;
      advance();
    }
  }

  std::uint32_t id_;
  TracePtr trace_;
  CoreParams params_;
  std::uint64_t target_;
  std::uint64_t base_;
  std::uint64_t region_;

  std::vector<Slot> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::uint32_t occupancy_ = 0;
  std::uint32_t outstanding_ = 0;
  bool known_miss_ = false;

  std::size_t pos_ = 0;
  std::uint32_t nonmem_left_ = 0;
  std::uint64_t retired_ = 0;
  std::uint64_t misses_ = 0;
  bool done_ = false;
  std::uint64_t done_cycle_ = 0;
  std::uint64_t misses_at_done_ = 0;
};

}  // namespace

SimResult simulate(const std::vector<TracePtr>& traces, const SystemConfig& cfg,
                   const std::vector<std::uint32_t>& regions) {
  if (traces.empty() || traces.size() > 64) throw RangeError("need between 1 and 64 cores");
  if (!regions.empty() && regions.size() != traces.size()) throw RangeError("one region per core");
  if (cfg.instructions == 0) throw RangeError("instruction target must be positive");
  if (cfg.core.issue_width == 0 || cfg.core.window == 0) throw ConfigError("core width and window must be positive");
  cfg.dram.validate();

  const auto mapping = dram::RowMapping::identity(cfg.dram.rows_per_bank);
  std::unique_ptr<mitigation::Policy> policy;
  if (cfg.mechanism.mechanism != mitigation::Mechanism::None) {
    policy = mitigation::make_policy(cfg.mechanism, cfg.dram, mapping);
  }
  memctrl::Controller mc(cfg.dram, cfg.controller, std::move(policy));

  const std::uint32_t n_regions = std::max<std::uint32_t>(cfg.address_regions, 1);
  const std::uint64_t stripe = std::uint64_t{cfg.dram.row_size_bytes} * cfg.dram.total_banks();
  const std::uint64_t region = cfg.dram.capacity_bytes() / n_regions / stripe * stripe;
  if (region == 0) throw ConfigError("too many address regions for the memory size");

  std::vector<Core> cores;
  cores.reserve(traces.size());
  for (std::uint32_t i = 0; i < traces.size(); ++i) {
    if (!traces[i]) throw RangeError("null trace");
    const std::uint32_t r = regions.empty() ? i : regions[i];
    if (r >= n_regions) throw RangeError("address region out of range");
    cores.emplace_back(i, traces[i], cfg.core, cfg.instructions, std::uint64_t{r} * region, region);
  }

  Cache llc(cfg.llc);
  if (cfg.warmup_instructions > 0) {
    // Interleave cores in chunks so no core owns the whole cache.
    const std::uint64_t chunk = 1000;
    for (std::uint64_t done = 0; done < cfg.warmup_instructions; done += chunk) {
      for (auto& c : cores) c.warm(llc, std::min(chunk, cfg.warmup_instructions - done));
    }
  }

  mc.set_completion_handler([&](const memctrl::Request& req, Cycle) {
    if (req.kind == memctrl::RequestKind::Read) cores[req.core_id].complete(static_cast<std::uint32_t>(req.tag));
  });

  std::deque<std::uint64_t> writebacks;
  std::uint64_t cpu_cycle = 0;
  Cycle dram_cycle = 0;
  const auto cpu_mhz = std::uint64_t{cfg.cpu_freq_mhz};
  const auto dram_mhz = std::uint64_t{cfg.dram.clock_freq_mhz};
  std::size_t finished = 0;
  while (finished < cores.size()) {
    const std::uint64_t cpu_end = static_cast<std::uint64_t>(dram_cycle + 1) * cpu_mhz / dram_mhz;
    for (; cpu_cycle < cpu_end; ++cpu_cycle) {
      for (auto& c : cores) c.step(cpu_cycle, llc, mc, writebacks);
    }
    while (!writebacks.empty() && mc.can_accept(memctrl::RequestKind::Write)) {
      memctrl::Request w;
      w.kind = memctrl::RequestKind::Write;
      w.address = writebacks.front();
      w.arrival = mc.now();
      mc.enqueue(w);
      writebacks.pop_front();
    }
    mc.tick();
    ++dram_cycle;
    finished = static_cast<std::size_t>(std::count_if(cores.begin(), cores.end(), [](const Core& c) { return c.done(); }));
  }

  SimResult out;
  for (const auto& c : cores) out.cores.push_back(c.result());
  out.memory = mc.metrics();
  out.dram_cycles = dram_cycle;
  return out;
}

double weighted_speedup(const std::vector<double>& shared_ipc, const std::vector<double>& alone_ipc) {
  if (shared_ipc.size() != alone_ipc.size()) throw RangeError("IPC vectors differ in length");
  double ws = 0.0;
  for (std::size_t i = 0; i < shared_ipc.size(); ++i) {
    if (!(alone_ipc[i] > 0.0)) throw RangeError("alone IPC must be positive");
    ws += shared_ipc[i] / alone_ipc[i];
  }
  return ws;
}

double normalized_performance(double ws, double baseline_ws) {
  if (!(baseline_ws > 0.0)) throw RangeError("baseline weighted speedup must be positive");
  return 100.0 * ws / baseline_ws;
}

}  // namespace rhsim::workload

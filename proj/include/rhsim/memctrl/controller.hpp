#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <queue>
#include <vector>

#include "rhsim/dram/bank.hpp"
#include "rhsim/dram/config.hpp"
#include "rhsim/memctrl/address_map.hpp"
#include "rhsim/mitigation/policy.hpp"

namespace rhsim::memctrl {

enum class RequestKind { Read, Write };

struct Request {
  RequestKind kind = RequestKind::Read;
  std::uint64_t address = 0;
  Cycle arrival = 0;
  std::uint32_t core_id = 0;
  /// Opaque to the controller; handed back on completion.
  std::uint64_t tag = 0;
};

struct ControllerParams {
  std::uint32_t read_queue_size = 64;
  std::uint32_t write_queue_size = 64;
  /// Writes are drained once more than `write_high` are queued, until at
  /// most `write_low` remain.
  std::uint32_t write_high = 48;
  std::uint32_t write_low = 32;
  /// Mitigation refreshes go before demand requests to the same bank.
  bool mitigation_priority = true;
  bool refresh_enabled = true;
  AddressScheme scheme = AddressScheme::RowBankGroupBankColumn;

  void validate() const;
};

struct Metrics {
  Cycle cycles = 0;
  std::uint64_t reads_served = 0;
  std::uint64_t writes_served = 0;
  std::uint64_t acts = 0;
  std::uint64_t pres = 0;
  std::uint64_t refs = 0;
  std::uint64_t mitigation_refs = 0;
  /// Column commands whose request did not need its own ACT.
  std::uint64_t row_hits = 0;
  /// Bank-cycles occupied by ACT (t_rc), MitigationREF (t_rc) and REF.
  std::uint64_t busy_cycles = 0;
  /// The part of busy_cycles caused by the mitigation mechanism.
  std::uint64_t mitigation_cycles = 0;
  std::uint64_t read_latency_sum = 0;

  std::uint64_t served_requests() const { return reads_served + writes_served; }
  /// mitigation_cycles / busy_cycles; 0 when nothing was busy.
  double bandwidth_overhead() const;
};

using CommandSink = std::function<void(const dram::Command&)>;
using CompletionHandler = std::function<void(const Request&, Cycle done)>;

/// FR-FCFS, open-page controller. Issues at most one command per channel
/// per cycle. REF is all-bank: open banks are precharged first and no
/// demand command issues while a REF is pending.
class Controller {
 public:
  Controller(const dram::DramConfig& cfg, ControllerParams params = {},
             std::unique_ptr<mitigation::Policy> policy = nullptr);

  bool can_accept(RequestKind kind) const;
  /// Returns false (backpressure) when the queue for `req.kind` is full.
  bool enqueue(const Request& req);
  void tick();

  Cycle now() const { return now_; }
  void set_completion_handler(CompletionHandler h) { on_complete_ = std::move(h); }
  void add_sink(CommandSink sink) { sinks_.push_back(std::move(sink)); }

  const Metrics& metrics() const { return metrics_; }
  void reset_metrics();

  std::size_t pending_reads() const { return reads_.size(); }
  std::size_t pending_writes() const { return writes_.size(); }
  std::size_t pending_directives() const;
  /// Nothing queued and no read in flight.
  bool idle() const;

  const AddressMap& address_map() const { return map_; }
  const dram::DramConfig& config() const { return cfg_; }
  const dram::BankState& bank(std::uint32_t flat) const { return banks_.at(flat); }
  mitigation::Policy* policy() const { return policy_.get(); }
  Cycle refresh_interval() const { return t_refi_; }

 private:
  struct Entry {
    Request req;
    DecodedAddress addr;
    std::uint32_t bank = 0;
    std::uint32_t channel = 0;
    bool activated = false;
  };
  struct ChannelState {
    Cycle next_ref = 0;
    Cycle next_column = 0;
    std::uint32_t ref_batch = 0;
    bool refresh_pending = false;
    bool draining = false;
  };
  struct InFlight {
    Cycle done;
    std::uint64_t seq;
    Request req;
    bool operator>(const InFlight& o) const { return done != o.done ? done > o.done : seq > o.seq; }
  };

  void schedule(std::uint32_t ch);
  bool handle_refresh(std::uint32_t ch);
  bool issue_directive(std::uint32_t ch);
  bool issue_demand(std::uint32_t ch);
  bool blocked(std::uint32_t bank) const;
  void issue(const dram::Command& cmd, std::uint32_t bank);
  void emit(const dram::Command& cmd);

  dram::DramConfig cfg_;
  ControllerParams params_;
  std::unique_ptr<mitigation::Policy> policy_;
  AddressMap map_;
  dram::BankTiming timing_;
  Cycle t_refi_;
  Cycle base_t_refi_;
  std::uint32_t banks_per_channel_;

  std::vector<dram::BankState> banks_;
  std::vector<std::deque<mitigation::RefreshDirective>> directives_;
  std::vector<ChannelState> channels_;
  std::vector<Entry> reads_;
  std::vector<Entry> writes_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> in_flight_;
  std::uint64_t seq_ = 0;

  Cycle now_ = 0;
  Metrics metrics_;
  std::vector<CommandSink> sinks_;
  CompletionHandler on_complete_;
  mitigation::DirectiveList scratch_;
  std::vector<std::uint8_t> bank_flags_;
};

}  // namespace rhsim::memctrl

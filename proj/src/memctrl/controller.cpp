#include "rhsim/memctrl/controller.hpp"

#include <algorithm>

namespace rhsim::memctrl {

void ControllerParams::validate() const {
  if (read_queue_size == 0 || write_queue_size == 0) throw ConfigError("queue sizes must be positive");
  if (write_low > write_high || write_high > write_queue_size) {
    throw ConfigError("need write_low <= write_high <= write_queue_size");
  }
}

double Metrics::bandwidth_overhead() const {
  if (busy_cycles == 0) return 0.0;
  return static_cast<double>(mitigation_cycles) / static_cast<double>(busy_cycles);
}

Controller::Controller(const dram::DramConfig& cfg, ControllerParams params,
                       std::unique_ptr<mitigation::Policy> policy)
    : cfg_(cfg),
      params_(params),
      policy_(std::move(policy)),
      map_(cfg, params.scheme),
      timing_(dram::BankTiming::from(cfg)),
      base_t_refi_(cfg.t_refi()),
      banks_per_channel_(cfg.ranks * cfg.banks_per_rank()),
      banks_(cfg.total_banks(), dram::BankState(cfg.rows_per_bank)),
      directives_(cfg.total_banks()),
      channels_(cfg.channels) {
  cfg.validate();
  params.validate();
  t_refi_ = base_t_refi_;
  if (policy_) {
    if (auto r = policy_->refresh_interval()) t_refi_ = *r;
  }
  for (auto& c : channels_) c.next_ref = t_refi_;
  reads_.reserve(params.read_queue_size);
  writes_.reserve(params.write_queue_size);
}

bool Controller::can_accept(RequestKind kind) const {
  return kind == RequestKind::Read ? reads_.size() < params_.read_queue_size
                                   : writes_.size() < params_.write_queue_size;
}

bool Controller::enqueue(const Request& req) {
  if (!can_accept(req.kind)) return false;
  Entry e;
  e.req = req;
  e.addr = map_.decode(req.address);
  e.bank = e.addr.row.flat_bank(cfg_);
  e.channel = e.addr.row.channel;
  (req.kind == RequestKind::Read ? reads_ : writes_).push_back(e);
  return true;
}

std::size_t Controller::pending_directives() const {
  std::size_t n = 0;
  for (const auto& d : directives_) n += d.size();
  return n;
}

bool Controller::idle() const {
  return reads_.empty() && writes_.empty() && in_flight_.empty() && pending_directives() == 0;
}

void Controller::reset_metrics() { metrics_ = Metrics{}; }

void Controller::tick() {
  while (!in_flight_.empty() && in_flight_.top().done <= now_) {
    const auto f = in_flight_.top();
    in_flight_.pop();
    if (on_complete_) on_complete_(f.req, f.done);
  }
  for (std::uint32_t ch = 0; ch < channels_.size(); ++ch) schedule(ch);
  ++now_;
  ++metrics_.cycles;
}

void Controller::schedule(std::uint32_t ch) {
  auto& c = channels_[ch];
  if (params_.refresh_enabled && now_ >= c.next_ref) c.refresh_pending = true;
  if (c.refresh_pending) {
    handle_refresh(ch);
    return;
  }
  if (params_.mitigation_priority && issue_directive(ch)) return;
  if (issue_demand(ch)) return;
  if (!params_.mitigation_priority) issue_directive(ch);
}

void Controller::emit(const dram::Command& cmd) {
  for (const auto& s : sinks_) s(cmd);
}

void Controller::issue(const dram::Command& cmd, std::uint32_t bank) {
  dram::apply(banks_[bank], cmd, now_, timing_);
  emit(cmd);
}

bool Controller::handle_refresh(std::uint32_t ch) {
  auto& c = channels_[ch];
  const std::uint32_t first = ch * banks_per_channel_;
  const std::uint32_t last = first + banks_per_channel_;
  bool all_closed = true;
  for (std::uint32_t b = first; b < last; ++b) {
    if (!banks_[b].open_row) continue;
    all_closed = false;
    dram::Command pre{dram::CommandKind::PRE, dram::RowAddress::from_flat_bank(cfg_, b, 0), 0, now_};
    if (dram::timing_allows(banks_[b], pre, now_, timing_)) {
      issue(pre, b);
      ++metrics_.pres;
      return true;
    }
  }
  if (!all_closed) return false;
  dram::Command ref{dram::CommandKind::REF, dram::RowAddress::from_flat_bank(cfg_, first, 0), c.ref_batch, now_};
  for (std::uint32_t b = first; b < last; ++b) {
    if (!dram::timing_allows(banks_[b], ref, now_, timing_)) return false;
  }
  for (std::uint32_t b = first; b < last; ++b) dram::apply(banks_[b], ref, now_, timing_);
  emit(ref);
  ++metrics_.refs;
  const auto busy = static_cast<std::uint64_t>(timing_.ref_busy) * banks_per_channel_;
  metrics_.busy_cycles += busy;
  if (t_refi_ < base_t_refi_) {
    // Only the REFs beyond the baseline rate are charged to the mitigation.
    const double extra = 1.0 - static_cast<double>(t_refi_) / static_cast<double>(base_t_refi_);
    metrics_.mitigation_cycles += static_cast<std::uint64_t>(static_cast<double>(busy) * extra + 0.5);
  }
  if (policy_) {
    const auto rows = dram::ref_batch_rows(timing_, c.ref_batch);
    scratch_.clear();
    policy_->on_ref(rows.first, rows.last, now_, scratch_);
    for (const auto& d : scratch_) directives_.at(d.target.flat_bank(cfg_)).push_back(d);
  }
  c.ref_batch = static_cast<std::uint32_t>((c.ref_batch + 1) % cfg_.refs_per_window());
  c.next_ref += t_refi_;
  c.refresh_pending = false;
  return true;
}

bool Controller::issue_directive(std::uint32_t ch) {
  const std::uint32_t first = ch * banks_per_channel_;
  for (std::uint32_t b = first; b < first + banks_per_channel_; ++b) {
    auto& q = directives_[b];
    if (q.empty()) continue;
    auto& bank = banks_[b];
    if (bank.open_row) {
      dram::Command pre{dram::CommandKind::PRE, dram::RowAddress::from_flat_bank(cfg_, b, 0), 0, now_};
      if (dram::timing_allows(bank, pre, now_, timing_)) {
        issue(pre, b);
        ++metrics_.pres;
        return true;
      }
      continue;
    }
    dram::Command mref{dram::CommandKind::MitigationREF, q.front().target, 0, now_};
    if (!dram::timing_allows(bank, mref, now_, timing_)) continue;
    issue(mref, b);
    q.pop_front();
    ++metrics_.mitigation_refs;
    metrics_.busy_cycles += static_cast<std::uint64_t>(timing_.t_rc);
    metrics_.mitigation_cycles += static_cast<std::uint64_t>(timing_.t_rc);
    return true;
  }
  return false;
}

bool Controller::blocked(std::uint32_t bank) const {
  return params_.mitigation_priority && !directives_[bank].empty();
}

bool Controller::issue_demand(std::uint32_t ch) {
  auto& c = channels_[ch];
  std::size_t writes_here = 0;
  std::size_t reads_here = 0;
  for (const auto& e : writes_) writes_here += e.channel == ch;
  for (const auto& e : reads_) reads_here += e.channel == ch;
  if (writes_here > params_.write_high) c.draining = true;
  if (writes_here <= params_.write_low) c.draining = false;
  const bool use_writes = c.draining || (reads_here == 0 && writes_here > 0);
  auto& queue = use_writes ? writes_ : reads_;
  if (queue.empty()) return false;

  // Per-bank legality, computed once; then one pass in age order: the
  // oldest issuable row hit wins, else the oldest request that can open
  // its row.
  const std::uint32_t first = ch * banks_per_channel_;
  bank_flags_.assign(banks_per_channel_, 0);
  constexpr std::uint8_t kAct = 1, kPre = 2, kCol = 4, kHit = 8;
  for (std::uint32_t b = 0; b < banks_per_channel_; ++b) {
    const auto& bank = banks_[first + b];
    if (blocked(first + b)) continue;
    if (!bank.open_row) {
      const dram::Command act{dram::CommandKind::ACT, {}, 0, now_};
      if (dram::timing_allows(bank, act, now_, timing_)) bank_flags_[b] |= kAct;
    } else {
      dram::Command probe{dram::CommandKind::PRE, {}, 0, now_};
      if (dram::timing_allows(bank, probe, now_, timing_)) bank_flags_[b] |= kPre;
      probe.kind = dram::CommandKind::RD;
      probe.target.row = *bank.open_row;
      if (dram::timing_allows(bank, probe, now_, timing_)) bank_flags_[b] |= kCol;
    }
  }
  for (const auto& e : queue) {
    if (e.channel == ch && banks_[e.bank].open_row == e.addr.row.row) bank_flags_[e.bank - first] |= kHit;
  }
  const bool column_free = now_ >= c.next_column;
  Entry* opener = nullptr;
  dram::CommandKind opener_cmd = dram::CommandKind::ACT;
  for (auto it = queue.begin(); it != queue.end(); ++it) {
    if (it->channel != ch) continue;
    const std::uint8_t f = bank_flags_[it->bank - first];
    const auto& bank = banks_[it->bank];
    if (bank.open_row == it->addr.row.row) {
      if (!column_free || !(f & kCol)) continue;
      const auto kind = it->req.kind == RequestKind::Read ? dram::CommandKind::RD : dram::CommandKind::WR;
      issue({kind, it->addr.row, 0, now_}, it->bank);
      c.next_column = now_ + cfg_.t_bl();
      if (!it->activated) ++metrics_.row_hits;
      if (kind == dram::CommandKind::RD) {
        const Cycle done = now_ + cfg_.t_cl() + cfg_.t_bl();
        in_flight_.push({done, seq_++, it->req});
        ++metrics_.reads_served;
        metrics_.read_latency_sum += static_cast<std::uint64_t>(done - it->req.arrival);
      } else {
        ++metrics_.writes_served;
        if (on_complete_) on_complete_(it->req, now_);
      }
      queue.erase(it);
      return true;
    }
    if (opener) continue;
    if (f & kAct) {
      opener = &*it;
      opener_cmd = dram::CommandKind::ACT;
    } else if ((f & kPre) && !(f & kHit)) {
      opener = &*it;
      opener_cmd = dram::CommandKind::PRE;
    }
  }
  if (!opener) return false;
  Entry& e = *opener;
  if (opener_cmd == dram::CommandKind::PRE) {
    issue({dram::CommandKind::PRE, e.addr.row, 0, now_}, e.bank);
    ++metrics_.pres;
    return true;
  }
  issue({dram::CommandKind::ACT, e.addr.row, 0, now_}, e.bank);
  e.activated = true;
  ++metrics_.acts;
  metrics_.busy_cycles += static_cast<std::uint64_t>(timing_.t_rc);
  if (policy_) {
    scratch_.clear();
    policy_->on_activate(e.addr.row, now_, scratch_);
    for (const auto& d : scratch_) directives_.at(d.target.flat_bank(cfg_)).push_back(d);
  }
  return true;
}

}  // namespace rhsim::memctrl

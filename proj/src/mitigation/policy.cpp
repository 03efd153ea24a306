#include "rhsim/mitigation/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rhsim/mitigation/tuning.hpp"

namespace rhsim::mitigation {

namespace {

struct MechanismName {
  Mechanism m;
  std::string_view name;
};

constexpr MechanismName kNames[] = {
    {Mechanism::None, "None"},         {Mechanism::IncreasedRefresh, "IncreasedRefresh"},
    {Mechanism::PARA, "PARA"},         {Mechanism::ProHIT, "ProHIT"},
    {Mechanism::MRLoc, "MRLoc"},       {Mechanism::TWiCe, "TWiCe"},
    {Mechanism::TWiCeIdeal, "TWiCe-ideal"}, {Mechanism::Ideal, "Ideal"},
};

constexpr std::uint32_t kProbabilisticTuningPoint = 2000;

}  // namespace

std::string_view to_string(Mechanism m) {
  for (const auto& n : kNames) {
    if (n.m == m) return n.name;
  }
  return "?";
}

Mechanism mechanism_from_string(std::string_view s) {
  for (const auto& n : kNames) {
    if (n.name == s) return n.m;
  }
  if (s == "TWiCeIdeal") return Mechanism::TWiCeIdeal;
  throw ConfigError("unknown mechanism '" + std::string(s) + "'");
}

std::vector<Mechanism> all_mechanisms() {
  std::vector<Mechanism> out;
  for (const auto& n : kNames) out.push_back(n.m);
  return out;
}

Policy::Policy(const dram::DramConfig& cfg, dram::RowMapping mapping)
    : cfg_(cfg), mapping_(std::move(mapping)) {
  if (mapping_.rows() != cfg_.rows_per_bank) throw ConfigError("mapping size differs from rows_per_bank");
}

void Policy::on_ref(std::uint32_t, std::uint32_t, Cycle, DirectiveList&) {}

void Policy::emit(DirectiveList& out, const dram::RowAddress& bank, std::uint32_t row) const {
  RefreshDirective d;
  d.target = bank;
  d.target.row = row;
  d.reason = mechanism();
  out.push_back(d);
}

// --- IncreasedRefresh ---

IncreasedRefresh::IncreasedRefresh(const dram::DramConfig& cfg, dram::RowMapping mapping,
                                   std::uint32_t hc_first)
    : Policy(cfg, std::move(mapping)) {
  if (!increased_refresh_window(hc_first, cfg.t_rc_ns).supported) {
    throw UnsupportedConfig("increased refresh rate does not scale below hc_first = 32k");
  }
  // Floor keeps the shortened window at or below hc_first * t_rc.
  t_refi_ = std::max<Cycle>(1, static_cast<Cycle>(hc_first) * cfg.t_rc() /
                                   static_cast<Cycle>(cfg.refs_per_window()));
  t_refi_ = std::min(t_refi_, cfg.t_refi());
}

// --- PARA ---

Para::Para(const dram::DramConfig& cfg, dram::RowMapping mapping, double p, std::uint64_t seed)
    : Policy(cfg, std::move(mapping)), q_(p / 2.0), rng_(seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("PARA p must be in [0, 1]");
}

std::unique_ptr<Para> Para::with_neighbor_probability(const dram::DramConfig& cfg, dram::RowMapping mapping,
                                                      double q, std::uint64_t seed) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("PARA neighbor probability must be in [0, 1]");
  auto para = std::make_unique<Para>(cfg, std::move(mapping), 0.0, seed);
  para->q_ = q;
  return para;
}

void Para::on_activate(const dram::RowAddress& aggressor, Cycle, DirectiveList& out) {
  if (q_ <= 0.0) return;
  for (const auto& n : victims(aggressor.row)) {
    if (uniform01(rng_) < q_) emit(out, aggressor, n.row);
  }
}

// --- ProHIT ---

ProHit::ProHit(const dram::DramConfig& cfg, dram::RowMapping mapping, ProHitParams params,
               std::uint64_t seed)
    : Policy(cfg, std::move(mapping)), params_(params), rng_(seed), tables_(cfg.total_banks()) {
  if (params.hot_capacity == 0 || params.cold_capacity == 0) {
    throw ConfigError("ProHIT tables need a capacity of at least one");
  }
  for (double p : {params.p_insert, params.p_evict, params.p_promote}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("ProHIT probabilities must be in [0, 1]");
  }
}

void ProHit::touch(std::uint32_t bank, std::uint32_t victim) {
  auto& t = tables_.at(bank);
  auto hot_it = std::find(t.hot.begin(), t.hot.end(), victim);
  if (hot_it != t.hot.end()) {
    if (hot_it != t.hot.begin()) std::iter_swap(hot_it, hot_it - 1);
    return;
  }
  auto cold_it = std::find(t.cold.begin(), t.cold.end(), victim);
  if (cold_it != t.cold.end()) {
    t.cold.erase(cold_it);
    const auto n = static_cast<std::uint32_t>(t.hot.size());
    std::size_t pos = 0;
    if (n > 1) {
      // Top with (1 - p_t) + p_t/n, each other position with p_t/n.
      const double u = uniform01(rng_);
      const double top = (1.0 - params_.p_promote) + params_.p_promote / n;
      if (u >= top) pos = 1 + std::min<std::size_t>(n - 2, static_cast<std::size_t>((u - top) / (params_.p_promote / n)));
    }
    t.hot.insert(t.hot.begin() + static_cast<std::ptrdiff_t>(pos), victim);
    if (t.hot.size() > params_.hot_capacity) t.hot.pop_back();
    return;
  }
  if (uniform01(rng_) >= params_.p_insert) return;
  if (t.cold.size() >= params_.cold_capacity) {
    // Oldest with (1 - p_e) + p_e/n, each other entry with p_e/n.
    const auto n = static_cast<std::uint32_t>(t.cold.size());
    const double u = uniform01(rng_);
    const double oldest = (1.0 - params_.p_evict) + params_.p_evict / n;
    std::size_t pos = 0;
    if (u >= oldest && n > 1) {
      pos = 1 + std::min<std::size_t>(n - 2, static_cast<std::size_t>((u - oldest) / (params_.p_evict / n)));
    }
    t.cold.erase(t.cold.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  t.cold.push_back(victim);
}

void ProHit::on_activate(const dram::RowAddress& aggressor, Cycle, DirectiveList&) {
  const auto bank = bank_index(aggressor);
  const auto v = victims(aggressor.row);
  // Both victims are looked up in the same cycle; the order in which their
  // updates land is not fixed, so draw it.
  const bool flip = v.size() == 2 && uniform01(rng_) < 0.5;
  for (std::size_t i = 0; i < v.size(); ++i) touch(bank, v[flip ? v.size() - 1 - i : i].row);
}

void ProHit::on_ref(std::uint32_t, std::uint32_t, Cycle, DirectiveList& out) {
  for (std::uint32_t b = 0; b < tables_.size(); ++b) {
    auto& hot = tables_[b].hot;
    if (hot.empty()) continue;
    emit(out, dram::RowAddress::from_flat_bank(cfg_, b, 0), hot.front());
    hot.erase(hot.begin());
  }
}

// --- MRLoc ---

Mrloc::Mrloc(const dram::DramConfig& cfg, dram::RowMapping mapping, MrlocParams params, std::uint64_t seed)
    : Policy(cfg, std::move(mapping)),
      params_(params),
      horizon_(std::max<Cycle>(1, static_cast<Cycle>(std::llround(params.horizon_trc * cfg.t_rc())))),
      rng_(seed),
      queues_(cfg.total_banks()) {
  if (params.queue_capacity == 0) throw ConfigError("MRLoc queue capacity must be positive");
  if (!(params.p_min >= 0 && params.p_min <= params.p_max && params.p_max <= 1)) {
    throw ConfigError("MRLoc needs 0 <= p_min <= p_max <= 1");
  }
  if (!(params.horizon_trc > 0)) throw ConfigError("MRLoc horizon must be positive");
}

double Mrloc::refresh_probability(Cycle gap) const {
  const double x = std::clamp(static_cast<double>(gap) / static_cast<double>(horizon_), 0.0, 1.0);
  return params_.p_max - (params_.p_max - params_.p_min) * x;
}

void Mrloc::on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) {
  auto& q = queues_.at(bank_index(aggressor));
  for (const auto& n : victims(aggressor.row)) {
    auto it = std::find_if(q.begin(), q.end(), [&](const Entry& e) { return e.row == n.row; });
    if (it != q.end()) {
      const Cycle gap = now - it->inserted;
      q.erase(it);
      if (uniform01(rng_) < refresh_probability(gap)) {
        emit(out, aggressor, n.row);
        continue;
      }
    } else if (q.size() >= params_.queue_capacity) {
      q.pop_front();
    }
    q.push_back({n.row, now});
  }
}

// --- TWiCe ---

Twice::Twice(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first, bool ideal)
    : Policy(cfg, std::move(mapping)),
      ideal_(ideal),
      entries_(cfg.total_banks(), std::vector<Entry>(cfg.rows_per_bank)),
      active_(cfg.total_banks()) {
  const auto t = twice_thresholds(hc_first, cfg.t_refw_ms, cfg.t_refi_us, ideal);
  t_rh_ = t.t_rh;
  pruning_threshold_ = t.pruning_threshold;
}

void Twice::on_activate(const dram::RowAddress& aggressor, Cycle, DirectiveList& out) {
  const auto bank = bank_index(aggressor);
  auto& entries = entries_[bank];
  for (const auto& n : victims(aggressor.row)) {
    auto& e = entries[n.row];
    if (!e.valid) {
      e = Entry{0, 0, true};
      active_[bank].push_back(n.row);
    }
    if (++e.act_count > t_rh_) {
      emit(out, aggressor, n.row);
      e.act_count = 0;
      e.life_count = 0;
    }
  }
}

void Twice::prune() {
  for (std::uint32_t b = 0; b < entries_.size(); ++b) {
    auto& entries = entries_[b];
    auto& active = active_[b];
    std::size_t keep = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto& e = entries[active[i]];
      ++e.life_count;
      if (static_cast<double>(e.act_count) < pruning_threshold_ * static_cast<double>(e.life_count)) {
        e = Entry{};
      } else {
        active[keep++] = active[i];
      }
    }
    active.resize(keep);
  }
}

void Twice::on_ref(std::uint32_t, std::uint32_t, Cycle, DirectiveList&) { prune(); }

std::size_t Twice::occupancy() const {
  std::size_t n = 0;
  for (const auto& a : active_) n += a.size();
  return n;
}

// --- Ideal ---

Ideal::Ideal(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first)
    : Policy(cfg, std::move(mapping)),
      hc_first_(hc_first),
      counters_(cfg.total_banks(), std::vector<std::uint32_t>(cfg.rows_per_bank, 0)) {
  if (hc_first < 2) throw RangeError("Ideal needs hc_first >= 2");
}

void Ideal::on_activate(const dram::RowAddress& aggressor, Cycle, DirectiveList& out) {
  auto& c = counters_[bank_index(aggressor)];
  c[aggressor.row] = 0;
  for (const auto& n : victims(aggressor.row)) {
    if (++c[n.row] >= hc_first_ - 1) {
      emit(out, aggressor, n.row);
      c[n.row] = 0;
    }
  }
}

void Ideal::on_ref(std::uint32_t first, std::uint32_t last, Cycle, DirectiveList&) {
  for (auto& c : counters_) std::fill(c.begin() + first, c.begin() + last, 0u);
}

// --- tuning and construction ---

TunedMechanism tune(const MechanismParams& params, const dram::DramConfig& cfg) {
  TunedMechanism t;
  const auto hc = params.hc_first;
  auto na = [&t](std::string reason) {
    t.supported = false;
    t.na_reason = std::move(reason);
  };
  switch (params.mechanism) {
    case Mechanism::None: break;
    case Mechanism::IncreasedRefresh: {
      const auto w = increased_refresh_window(hc, cfg.t_rc_ns);
      t.values["t_refw_ms"] = w.t_refw_ms;
      if (!w.supported) na("increased_refresh_below_32k");
      break;
    }
    case Mechanism::PARA: {
      if (params.para_p) {
        t.values["p"] = *params.para_p;
        break;
      }
      try {
        t.values["p"] = para_tune(hc, params.para_ber_per_hour, cfg.t_rc_ns);
      } catch (const InfeasibleError&) {
        t.values["p"] = 1.0;
        t.notes.push_back("para_saturated: no p <= 1 meets the BER target; using p = 1 (ber_target_unmet)");
      }
      break;
    }
    case Mechanism::ProHIT:
      t.values["hot_capacity"] = params.prohit.hot_capacity;
      t.values["cold_capacity"] = params.prohit.cold_capacity;
      t.values["p_i"] = params.prohit.p_insert;
      t.values["p_e"] = params.prohit.p_evict;
      t.values["p_t"] = params.prohit.p_promote;
      if (hc != kProbabilisticTuningPoint) na("tuned_only_for_2000");
      break;
    case Mechanism::MRLoc:
      t.values["queue_capacity"] = params.mrloc.queue_capacity;
      t.values["p_max"] = params.mrloc.p_max;
      t.values["p_min"] = params.mrloc.p_min;
      t.values["horizon_trc"] = params.mrloc.horizon_trc;
      if (hc != kProbabilisticTuningPoint) na("tuned_only_for_2000");
      break;
    case Mechanism::TWiCe:
    case Mechanism::TWiCeIdeal: {
      const bool ideal = params.mechanism == Mechanism::TWiCeIdeal;
      if (hc < 4) {
        na("hc_first_too_small");
        break;
      }
      const std::uint32_t t_rh = hc / 4;
      t.values["t_rh"] = t_rh;
      t.values["pruning_threshold"] = t_rh / (cfg.t_refw_ms * 1000.0 / cfg.t_refi_us);
      if (!ideal && t_rh < kTwiceMinThreshold) na("twice_below_32k");
      break;
    }
    case Mechanism::Ideal:
      if (hc < 2) na("hc_first_too_small");
      break;
  }
  return t;
}

std::unique_ptr<Policy> make_policy(const MechanismParams& params, const dram::DramConfig& cfg,
                                    const dram::RowMapping& mapping) {
  const auto t = tune(params, cfg);
  if (!t.supported) {
    throw UnsupportedConfig(std::string(to_string(params.mechanism)) + " at hc_first = " +
                            std::to_string(params.hc_first) + ": " + t.na_reason);
  }
  switch (params.mechanism) {
    case Mechanism::None: return std::make_unique<NoMitigation>(cfg, mapping);
    case Mechanism::IncreasedRefresh:
      return std::make_unique<IncreasedRefresh>(cfg, mapping, params.hc_first);
    case Mechanism::PARA: return std::make_unique<Para>(cfg, mapping, t.values.at("p"), params.seed);
    case Mechanism::ProHIT: return std::make_unique<ProHit>(cfg, mapping, params.prohit, params.seed);
    case Mechanism::MRLoc: return std::make_unique<Mrloc>(cfg, mapping, params.mrloc, params.seed);
    case Mechanism::TWiCe: return std::make_unique<Twice>(cfg, mapping, params.hc_first, false);
    case Mechanism::TWiCeIdeal: return std::make_unique<Twice>(cfg, mapping, params.hc_first, true);
    case Mechanism::Ideal: return std::make_unique<Ideal>(cfg, mapping, params.hc_first);
  }
  throw ConfigError("unknown mechanism");
}

}  // namespace rhsim::mitigation

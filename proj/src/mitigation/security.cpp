#include "rhsim/mitigation/security.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <random>

namespace rhsim::mitigation {

ExposureTracker::ExposureTracker(const dram::DramConfig& cfg, dram::RowMapping mapping,
                                 std::uint32_t hc_first)
    : mapping_(std::move(mapping)),
      hc_first_(hc_first),
      counts_(cfg.total_banks(), std::vector<std::uint32_t>(cfg.rows_per_bank, 0)),
      unsettled_(cfg.total_banks()) {}

void ExposureTracker::on_activate(std::uint32_t bank, std::uint32_t row) {
  settle(bank);
  auto& c = counts_[bank];
  c[row] = 0;
  unsettled_[bank] = mapping_.adjacent_rows(row, 1);
  for (const auto& n : unsettled_[bank]) {
    const auto v = ++c[n.row];
    if (v == 1) touched_.emplace_back(bank, n.row);
    max_ = std::max(max_, v);
  }
}

void ExposureTracker::settle(std::uint32_t bank) {
  auto& pending = unsettled_[bank];
  for (const auto& n : pending) {
    if (watch_ && *watch_ != n.row) continue;
    if (counts_[bank][n.row] >= hc_first_) ++violations_;
  }
  pending = {};
}

void ExposureTracker::settle_all() {
  for (std::uint32_t b = 0; b < unsettled_.size(); ++b) settle(b);
}

void ExposureTracker::on_refresh(std::uint32_t bank, std::uint32_t row) { counts_[bank][row] = 0; }

void ExposureTracker::on_ref(std::uint32_t first, std::uint32_t last) {
  for (auto& c : counts_) std::fill(c.begin() + first, c.begin() + last, 0u);
}

void ExposureTracker::reset() {
  for (const auto& [b, r] : touched_) counts_[b][r] = 0;
  touched_.clear();
  for (auto& u : unsettled_) u = {};
  max_ = 0;
  violations_ = 0;
}

dram::DramConfig attack_bank_config(const dram::DramConfig& cfg) {
  auto c = cfg;
  c.channels = c.ranks = c.bank_groups = c.banks_per_group = 1;
  return c;
}

TrialResult run_attack_trial(const MechanismParams& params, const dram::DramConfig& full_cfg,
                             const AttackOptions& opts, std::uint64_t seed) {
  const auto cfg = attack_bank_config(full_cfg);
  const auto mapping = dram::RowMapping::identity(cfg.rows_per_bank);
  auto trial_params = params;
  trial_params.seed = derive_seed(seed, 1);
  auto policy = make_policy(trial_params, cfg, mapping);
  ExposureTracker tracker(cfg, mapping, params.hc_first);

  const std::uint32_t victim = opts.victim.value_or(cfg.rows_per_bank / 2);
  const auto aggressors = mapping.adjacent_rows(victim, 1);
  if (aggressors.size() != 2) throw RangeError("double-sided attack needs an interior victim");
  if (opts.victim_only) tracker.watch_only(victim);

  const dram::BankTiming timing = dram::BankTiming::from(cfg);
  const Cycle t_refi = policy->refresh_interval().value_or(cfg.t_refi());
  const auto refs = static_cast<std::uint32_t>(cfg.refs_per_window());
  std::mt19937_64 rng(derive_seed(seed, 2));
  Cycle next_ref = opts.random_ref_phase ? static_cast<Cycle>(uniform_below(rng, t_refi)) : t_refi;
  std::uint32_t batch = opts.random_ref_phase ? static_cast<std::uint32_t>(uniform_below(rng, refs)) : 0;
  const Cycle end = t_refi * static_cast<Cycle>(refs);

  TrialResult r;
  DirectiveList pending;
  Cycle now = 0;
  std::size_t which = 0;
  const dram::RowAddress bank{};
  while (true) {
    if (opts.window_acts ? r.activations >= *opts.window_acts : now >= end) break;
    if (now >= next_ref) {
      const auto rows = dram::ref_batch_rows(timing, batch);
      tracker.on_ref(rows.first, rows.last);
      policy->on_ref(rows.first, rows.last, now, pending);
      now += timing.ref_busy;
      next_ref += t_refi;
      batch = (batch + 1) % refs;
    }
    for (const auto& d : pending) {
      tracker.on_refresh(0, d.target.row);
      now += timing.t_rc;
    }
    r.directives += pending.size();
    pending.clear();
    if (now >= next_ref) continue;

    tracker.settle(0);
    if (tracker.failed()) {
      r.failed = true;
      break;
    }

    auto a = bank;
    a.row = aggressors[which].row;
    which ^= 1;
    tracker.on_activate(0, a.row);
    ++r.activations;
    policy->on_activate(a, now, pending);
    now += timing.t_rc;
  }
  if (!r.failed) {
    for (const auto& d : pending) tracker.on_refresh(0, d.target.row);
    r.directives += pending.size();
    tracker.settle(0);
    r.failed = tracker.failed();
  }
  r.max_exposure = tracker.max_exposure();
  return r;
}

double clopper_pearson_upper(std::uint64_t failures, std::uint64_t trials, double confidence) {
  if (trials == 0) throw RangeError("need at least one trial");
  if (failures >= trials) return 1.0;
  const double alpha = 1.0 - confidence;
  return boost::math::ibeta_inv(static_cast<double>(failures + 1), static_cast<double>(trials - failures),
                                1.0 - alpha / 2.0);
}

SecurityResult verify_security(const MechanismParams& params, const dram::DramConfig& cfg,
                               std::uint64_t trials, std::uint64_t seed, const AttackOptions& opts) {
  if (trials < 1) throw RangeError("trials must be >= 1");
  SecurityResult s;
  s.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto r = run_attack_trial(params, cfg, opts, derive_seed(seed, t));
    s.failures += r.failed;
    s.max_exposure = std::max(s.max_exposure, r.max_exposure);
    s.directives += r.directives;
  }
  s.failure_rate = static_cast<double>(s.failures) / static_cast<double>(trials);
  s.upper_conf_bound = clopper_pearson_upper(s.failures, trials);
  return s;
}

}  // namespace rhsim::mitigation

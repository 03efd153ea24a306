#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "rhsim/mitigation/policy.hpp"
#include "rhsim/mitigation/security.hpp"
#include "rhsim/mitigation/tuning.hpp"

using namespace rhsim;
using namespace rhsim::mitigation;

namespace {

dram::DramConfig one_bank() {
  dram::DramConfig c;
  c.bank_groups = 1;
  c.banks_per_group = 1;
  c.rows_per_bank = 1024;
  return c;
}

dram::RowAddress row(std::uint32_t r) {
  dram::RowAddress a;
  a.row = r;
  return a;
}

std::size_t count_for(const DirectiveList& l, std::uint32_t target) {
  return static_cast<std::size_t>(
      std::count_if(l.begin(), l.end(), [&](const RefreshDirective& d) { return d.target.row == target; }));
}

}  // namespace

TEST_SUITE("mitigation") {

TEST_CASE("TWiCe thresholds") {
  const auto t = twice_thresholds(200000, 64, 7.8125);
  CHECK(t.t_rh == 50000);
  CHECK(t.pruning_threshold == 50000.0 / 8192.0);
  CHECK(t.pruning_threshold == doctest::Approx(6.1035).epsilon(1e-4));
  CHECK(twice_thresholds(32768, 64, 7.8125).t_rh == 8192);
  CHECK_THROWS_AS(twice_thresholds(4800, 64, 7.8125), UnsupportedConfig);
  CHECK_THROWS_AS(twice_thresholds(32000, 64, 7.8125), UnsupportedConfig);
  CHECK(twice_thresholds(4800, 64, 7.8125, true).t_rh == 1200);
  CHECK_THROWS_AS(twice_thresholds(3, 64, 7.8125, true), RangeError);
}

TEST_CASE("increased refresh window") {
  CHECK(increased_refresh_window(32000, 50).t_refw_ms == 1.6);
  CHECK(increased_refresh_window(32000, 50).supported);
  CHECK(increased_refresh_window(200000, 50).t_refw_ms == 10.0);
  CHECK_FALSE(increased_refresh_window(10000, 50).supported);
  CHECK_FALSE(increased_refresh_window(31999, 50).supported);
}

TEST_CASE("PARA tuning closed form") {
  const double p = para_tune_attempts(64, 1e-3, 1.0);
  CHECK(std::pow(1.0 - p / 2.0, 64) == doctest::Approx(1e-3));
  CHECK(p == doctest::Approx(0.2046).epsilon(1e-3));

  const double p48 = para_tune(4800, 1e-15, 60);
  const double attempts = 3600.0 / (4800 * 60e-9);
  CHECK(para_attempt_failure(p48, 4800) * attempts == doctest::Approx(1e-15).epsilon(1e-6));

  double prev = 1.0;
  for (std::uint32_t hc : {100u, 128u, 256u, 512u, 1024u, 2000u, 4800u, 32768u, 200000u}) {
    const double q = para_tune(hc, 1e-15, 50);
    CHECK(q <= prev);
    prev = q;
  }
  CHECK(para_tune(1000000000u, 1e-15, 50) < 1e-6);
  CHECK_THROWS_AS(para_tune(1, 1e-15, 50), InfeasibleError);
  CHECK_THROWS_AS(para_tune(64, 1e-15, 50), InfeasibleError);
}

TEST_CASE("PARA neighbor refresh") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  DirectiveList out;
  auto both = Para::with_neighbor_probability(cfg, map, 1.0, 1);
  both->on_activate(row(10), 0, out);
  CHECK(out.size() == 2);
  CHECK(count_for(out, 9) == 1);
  CHECK(count_for(out, 11) == 1);
  out.clear();
  // p = 1 refreshes each neighbor with probability 1/2.
  Para full(cfg, map, 1.0, 1);
  for (int i = 0; i < 10000; ++i) full.on_activate(row(10), i, out);
  CHECK(std::abs(static_cast<double>(count_for(out, 9)) - 5000.0) < 4 * 50.0);
  CHECK(std::abs(static_cast<double>(count_for(out, 11)) - 5000.0) < 4 * 50.0);
  out.clear();
  Para never(cfg, map, 0.0, 1);
  for (int i = 0; i < 1000; ++i) never.on_activate(row(10), i, out);
  CHECK(out.empty());

  Para low(cfg, map, 0.01, 77);
  const int acts = 1000000;
  for (int i = 0; i < acts; ++i) {
    low.on_activate(row(500), i, out);
  }
  // Binomial(2e6, 0.005): mean 1e4, sd ~99.7.
  const double sd = std::sqrt(2.0 * acts * 0.005 * 0.995);
  CHECK(std::abs(static_cast<double>(out.size()) - 1e4) < 4 * sd);
}

TEST_CASE("PARA Monte Carlo agrees with the closed form") {
  MechanismParams mp;
  mp.mechanism = Mechanism::PARA;
  mp.hc_first = 64;
  mp.para_p = para_tune_attempts(64, 1e-3, 1.0);
  AttackOptions opts;
  opts.window_acts = 64;
  const std::uint64_t trials = 100000;
  const auto r = verify_security(mp, dram::DramConfig{}, trials, 5, opts);
  const double sigma = std::sqrt(1e-3 * (1 - 1e-3) / trials);
  CHECK(std::abs(r.failure_rate - 1e-3) <= 3 * sigma);
}

TEST_CASE("ProHIT table rules") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  ProHitParams pp;
  pp.p_insert = 1.0;
  ProHit ph(cfg, map, pp, 3);
  DirectiveList out;
  ph.on_activate(row(10), 0, out);
  CHECK(out.empty());
  auto& t = ph.tables(0);
  CHECK(t.cold == std::deque<std::uint32_t>{9, 11});
  CHECK(t.hot.empty());

  ph.on_ref(0, 0, 0, out);
  CHECK(out.empty());

  t.hot = {5, 2};
  t.cold.clear();
  ph.touch(0, 5);
  CHECK(t.hot == std::vector<std::uint32_t>{5, 2});
  ph.touch(0, 2);
  CHECK(t.hot == std::vector<std::uint32_t>{2, 5});
  t.hot = {5, 2};
  ph.on_ref(0, 0, 0, out);
  REQUIRE(out.size() == 1);
  CHECK(out[0].target.row == 5);
  CHECK(t.hot == std::vector<std::uint32_t>{2});
}

TEST_CASE("ProHIT eviction with p_e = 0 always drops the oldest") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  ProHitParams pp;
  pp.p_insert = 1.0;
  pp.p_evict = 0.0;
  ProHit ph(cfg, map, pp, 9);
  auto& t = ph.tables(0);
  for (std::uint32_t v = 100; v < 104; ++v) ph.touch(0, v);
  for (std::uint32_t v = 200; v < 400; ++v) {
    const auto oldest = t.cold.front();
    ph.touch(0, v);
    CHECK(std::find(t.cold.begin(), t.cold.end(), oldest) == t.cold.end());
    CHECK(t.cold.back() == v);
    CHECK(t.cold.size() == 4);
  }
}

TEST_CASE("ProHIT eviction and promotion follow the stated distributions") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  ProHitParams pp;
  pp.p_insert = 1.0;
  pp.p_evict = 0.5;
  pp.p_promote = 0.5;
  ProHit ph(cfg, map, pp, 21);
  auto& t = ph.tables(0);
  std::map<int, int> evicted_pos, promoted_pos;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    t.cold = {1, 2, 3, 4};
    ph.touch(0, 99);
    for (std::uint32_t j = 1; j <= 4; ++j) {
      if (std::find(t.cold.begin(), t.cold.end(), j) == t.cold.end()) evicted_pos[j - 1]++;
    }
    t.hot = {10, 11, 12};
    t.cold = {7};
    ph.touch(0, 7);
    promoted_pos[static_cast<int>(std::find(t.hot.begin(), t.hot.end(), 7u) - t.hot.begin())]++;
  }
  // Eviction: oldest (1 - 0.5) + 0.5/4 = 0.625, others 0.125.
  CHECK(evicted_pos[0] / double(n) == doctest::Approx(0.625).epsilon(0.03));
  for (int j = 1; j < 4; ++j) CHECK(evicted_pos[j] / double(n) == doctest::Approx(0.125).epsilon(0.06));
  // Promotion with 3 hot entries: top 0.5 + 0.5/3, others 0.5/3.
  CHECK(promoted_pos[0] / double(n) == doctest::Approx(0.5 + 0.5 / 3).epsilon(0.03));
  CHECK(promoted_pos[1] / double(n) == doctest::Approx(0.5 / 3).epsilon(0.06));
  CHECK(promoted_pos[2] / double(n) == doctest::Approx(0.5 / 3).epsilon(0.06));
}

TEST_CASE("ProHIT tables stay within capacity") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  ProHit ph(cfg, map, ProHitParams{}, 4);
  std::mt19937_64 rng(1);
  DirectiveList out;
  for (int i = 0; i < 100000; ++i) {
    ph.on_activate(row(static_cast<std::uint32_t>(1 + rng() % 30)), i, out);
    if (i % 150 == 0) ph.on_ref(0, 0, i, out);
    const auto& t = ph.tables(0);
    REQUIRE(t.hot.size() <= 4);
    REQUIRE(t.cold.size() <= 4);
    for (auto h : t.hot) REQUIRE(std::find(t.cold.begin(), t.cold.end(), h) == t.cold.end());
  }
}

TEST_CASE("MRLoc queue behavior") {
  const auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  MrlocParams mp;
  mp.p_max = 1.0;
  mp.p_min = 1.0;
  Mrloc m(cfg, map, mp, 1);
  DirectiveList out;
  m.on_activate(row(10), 0, out);
  CHECK(out.empty());
  CHECK(m.queue(0).size() == 2);
  m.on_activate(row(10), 1, out);
  CHECK(out.size() == 2);
  CHECK(m.queue(0).empty());

  MrlocParams small;
  small.queue_capacity = 3;
  Mrloc q(cfg, map, small, 2);
  for (std::uint32_t r = 10; r < 40; r += 3) q.on_activate(row(r), r, out);
  CHECK(q.queue(0).size() == 3);

  Mrloc decay(cfg, map, MrlocParams{}, 3);
  CHECK(decay.refresh_probability(0) == doctest::Approx(0.05));
  CHECK(decay.refresh_probability(64 * cfg.t_rc()) == doctest::Approx(0.0));
  CHECK(decay.refresh_probability(32 * cfg.t_rc()) == doctest::Approx(0.025));
}

TEST_CASE("TWiCe counting") {
  auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  Twice tw(cfg, map, 128, true);
  CHECK(tw.t_rh() == 32);
  DirectiveList out;
  for (int i = 0; i < 32; ++i) tw.on_activate(row(99), i, out);
  CHECK(count_for(out, 100) == 0);
  tw.on_activate(row(99), 32, out);
  CHECK(count_for(out, 100) == 1);

  Twice shared(cfg, map, 128, true);
  out.clear();
  for (int i = 0; i < 16; ++i) {
    shared.on_activate(row(99), i, out);
    shared.on_activate(row(101), i, out);
  }
  CHECK(shared.entry(0, 100).act_count == 32);

  for (std::uint32_t h : {1u, 32u, 33u, 66u, 67u, 1000u, 12345u}) {
    Twice t(cfg, map, 128, true);
    DirectiveList d;
    for (std::uint32_t i = 0; i < h; ++i) t.on_activate(row(i % 2 ? 101 : 99), i, d);
    CHECK(count_for(d, 100) == h / (t.t_rh() + 1));
  }
  CHECK_THROWS_AS(Twice(cfg, map, 4800, false), UnsupportedConfig);
}

TEST_CASE("TWiCe pruning") {
  auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  Twice tw(cfg, map, 32768, false);
  DirectiveList out;
  tw.on_activate(row(500), 0, out);
  CHECK(tw.occupancy() == 2);
  for (int i = 0; i < 10; ++i) tw.prune();
  CHECK(tw.occupancy() == 0);

  Twice busy(cfg, map, 32768, false);
  for (int interval = 0; interval < 200; ++interval) {
    for (int i = 0; i < 150; ++i) busy.on_activate(row(i % 2 ? 101 : 99), i, out);
    busy.prune();
  }
  CHECK(busy.entry(0, 100).valid);

  Twice rotating(cfg, map, 32768, false);
  std::size_t peak = 0;
  for (int interval = 0; interval < 300; ++interval) {
    for (int i = 0; i < 150; ++i) {
      rotating.on_activate(row(static_cast<std::uint32_t>(2 + 2 * ((interval * 150 + i) % 48))), i, out);
    }
    rotating.prune();
    peak = std::max(peak, rotating.occupancy());
  }
  CHECK(peak <= 49);
}

TEST_CASE("Ideal counting") {
  auto cfg = one_bank();
  const auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  {
    Ideal ideal(cfg, map, 100);
    DirectiveList out;
    for (int i = 0; i < 98; ++i) ideal.on_activate(row(50), i, out);
    CHECK(out.empty());
  }
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto hc = static_cast<std::uint32_t>(2 + rng() % 3000);
    const auto h = static_cast<std::uint32_t>(rng() % 50000);
    Ideal ideal(cfg, map, hc);
    DirectiveList out;
    for (std::uint32_t i = 0; i < h; ++i) ideal.on_activate(row(i % 2 ? 501 : 499), i, out);
    CHECK(count_for(out, 500) == h / (hc - 1));
  }
}

TEST_CASE("deterministic mechanisms survive a full window of attack") {
  const dram::DramConfig cfg;
  struct Case {
    Mechanism m;
    std::uint32_t hc;
  };
  for (auto c : {Case{Mechanism::Ideal, 128}, Case{Mechanism::TWiCe, 32768},
                 Case{Mechanism::TWiCeIdeal, 4800}, Case{Mechanism::IncreasedRefresh, 32768}}) {
    MechanismParams mp;
    mp.mechanism = c.m;
    mp.hc_first = c.hc;
    const auto r = verify_security(mp, cfg, 1, 11);
    CHECK(r.failures == 0);
    CHECK(r.max_exposure < c.hc);
  }
  MechanismParams none;
  none.mechanism = Mechanism::None;
  none.hc_first = 128;
  CHECK(verify_security(none, cfg, 1, 11).failures == 1);
}

TEST_CASE("ProHIT and MRLoc protect the hammered victim at 2000") {
  AttackOptions opts;
  opts.window_acts = 16000;
  opts.victim_only = true;
  for (auto m : {Mechanism::ProHIT, Mechanism::MRLoc}) {
    MechanismParams mp;
    mp.mechanism = m;
    mp.hc_first = 2000;
    const auto r = verify_security(mp, dram::DramConfig{}, 500, 8, opts);
    CHECK(r.failures == 0);
  }
}

TEST_CASE("ProHIT leaves single-sided outer victims exposed") {
  AttackOptions opts;
  opts.window_acts = 16000;
  MechanismParams mp;
  mp.mechanism = Mechanism::ProHIT;
  mp.hc_first = 2000;
  CHECK(verify_security(mp, dram::DramConfig{}, 20, 8, opts).failure_rate > 0.5);
}

TEST_CASE("Clopper-Pearson upper bound") {
  CHECK(clopper_pearson_upper(0, 10000) == doctest::Approx(1 - std::pow(0.025, 1e-4)).epsilon(1e-6));
  CHECK(clopper_pearson_upper(5, 5) == 1.0);
  CHECK(clopper_pearson_upper(50, 1000) > 0.05);
}

TEST_CASE("support rules") {
  const dram::DramConfig cfg;
  auto tuned = [&](Mechanism m, std::uint32_t hc) {
    MechanismParams p;
    p.mechanism = m;
    p.hc_first = hc;
    return tune(p, cfg);
  };
  CHECK_FALSE(tuned(Mechanism::IncreasedRefresh, 10000).supported);
  CHECK(tuned(Mechanism::IncreasedRefresh, 32768).supported);
  CHECK_FALSE(tuned(Mechanism::TWiCe, 16384).supported);
  CHECK(tuned(Mechanism::TWiCeIdeal, 64).supported);
  CHECK_FALSE(tuned(Mechanism::ProHIT, 1024).supported);
  CHECK(tuned(Mechanism::MRLoc, 2000).supported);
  const auto para64 = tuned(Mechanism::PARA, 64);
  CHECK(para64.supported);
  CHECK(para64.values.at("p") == 1.0);
  CHECK_FALSE(para64.notes.empty());
  CHECK(mechanism_from_string("TWiCe-ideal") == Mechanism::TWiCeIdeal);
}

}  // TEST_SUITE

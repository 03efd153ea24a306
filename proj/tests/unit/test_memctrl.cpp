#include <map>
#include <random>

#include "doctest.h"
#include "rhsim/memctrl/address_map.hpp"
#include "rhsim/memctrl/controller.hpp"
#include "rhsim/mitigation/security.hpp"

using namespace rhsim;
using namespace rhsim::memctrl;

namespace {

std::uint64_t address_of(const AddressMap& m, std::uint32_t bank, std::uint32_t row, std::uint32_t col = 0) {
  DecodedAddress d;
  d.row = dram::RowAddress::from_flat_bank(dram::DramConfig{}, bank, row);
  d.column = col;
  return m.encode(d);
}

dram::DramConfig no_refresh_cfg() { return dram::DramConfig{}; }

ControllerParams no_refresh() {
  ControllerParams p;
  p.refresh_enabled = false;
  return p;
}

}  // namespace

TEST_SUITE("memctrl") {

TEST_CASE("address map is a bijection") {
  dram::DramConfig small;
  small.bank_groups = 2;
  small.banks_per_group = 3;
  small.rows_per_bank = 5;
  small.row_size_bytes = 256;
  small.ranks = 2;
  for (auto scheme : {AddressScheme::RowBankGroupBankColumn, AddressScheme::RowColumnBankGroupBank}) {
    AddressMap m(small, scheme);
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t>, int> seen;
    for (std::uint64_t a = 0; a < m.capacity(); ++a) {
      const auto d = m.decode(a);
      CHECK(m.encode(d) == a);
      seen[{d.row.rank, d.row.bank_group, d.row.bank, d.row.row, d.column}]++;
    }
    CHECK(seen.size() == m.capacity());
  }
  AddressMap big(dram::DramConfig{});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const auto a = rng() % big.capacity();
    CHECK(big.encode(big.decode(a)) == a);
  }
}

TEST_CASE("row-interleaved layout") {
  AddressMap m(dram::DramConfig{});
  CHECK(m.decode(8191).row.bank == 0);
  CHECK(m.decode(8192).row.bank == 1);
  CHECK(m.decode(8192 * 4).row.bank_group == 1);
  CHECK(m.decode(8192 * 16).row.row == 1);
  CHECK(m.decode(8192 * 16).row.bank == 0);
  AddressMap lines(dram::DramConfig{}, AddressScheme::RowColumnBankGroupBank);
  CHECK(lines.decode(64).row.bank == 1);
  CHECK(lines.decode(64 * 16).column == 64);
}

TEST_CASE("queue capacity and backpressure") {
  Controller c(no_refresh_cfg(), no_refresh());
  CHECK(c.enqueue({RequestKind::Read, 0, 0, 0, 0}));
  for (int i = 1; i < 64; ++i) REQUIRE(c.enqueue({RequestKind::Read, std::uint64_t(i) * 64, 0, 0, 0}));
  CHECK_FALSE(c.enqueue({RequestKind::Read, 1 << 20, 0, 0, 0}));
  CHECK(c.enqueue({RequestKind::Write, 1 << 20, 0, 0, 0}));
  while (c.metrics().reads_served == 0) c.tick();
  CHECK(c.enqueue({RequestKind::Read, 1 << 20, 0, 0, 0}));
}

TEST_CASE("FR-FCFS prefers the open row") {
  Controller c(no_refresh_cfg(), no_refresh());
  const auto& m = c.address_map();
  std::vector<std::uint32_t> rd_rows;
  c.add_sink([&](const dram::Command& cmd) {
    if (cmd.kind == dram::CommandKind::RD) rd_rows.push_back(cmd.target.row);
  });
  c.enqueue({RequestKind::Read, address_of(m, 0, 5), 0, 0, 1});
  while (rd_rows.empty()) c.tick();
  c.enqueue({RequestKind::Read, address_of(m, 0, 9), 0, 0, 2});
  c.enqueue({RequestKind::Read, address_of(m, 0, 5, 64), 1, 0, 3});
  while (rd_rows.size() < 3) c.tick();
  CHECK(rd_rows == std::vector<std::uint32_t>{5, 5, 9});
  CHECK(c.metrics().row_hits == 1);
}

TEST_CASE("one ACT per t_rc on a single bank") {
  Controller c(no_refresh_cfg(), no_refresh());
  const auto& m = c.address_map();
  std::uint32_t next_row = 0;
  const Cycle horizon = 100000;
  while (c.now() < horizon) {
    while (c.can_accept(RequestKind::Read)) {
      c.enqueue({RequestKind::Read, address_of(m, 0, next_row++ % 16384), c.now(), 0, 0});
    }
    c.tick();
  }
  const auto t_rc = dram::DramConfig{}.t_rc();
  CHECK(c.metrics().acts == static_cast<std::uint64_t>((horizon + t_rc - 1) / t_rc));
}

TEST_CASE("refresh issues on schedule while reads are pending") {
  Controller c{dram::DramConfig{}};
  const auto& m = c.address_map();
  std::vector<Cycle> refs;
  c.add_sink([&](const dram::Command& cmd) {
    if (cmd.kind == dram::CommandKind::REF) refs.push_back(cmd.issue_cycle);
  });
  std::mt19937_64 rng(5);
  const Cycle t_refi = dram::DramConfig{}.t_refi();
  while (c.now() < 10 * t_refi + t_refi / 2) {
    while (c.can_accept(RequestKind::Read)) {
      c.enqueue({RequestKind::Read, address_of(m, rng() % 16, rng() % 16384), c.now(), 0, 0});
    }
    c.tick();
  }
  REQUIRE(refs.size() == 10);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    CHECK(refs[i] >= static_cast<Cycle>(i + 1) * t_refi);
    CHECK(refs[i] < static_cast<Cycle>(i + 1) * t_refi + 100);
  }
}

TEST_CASE("independent timing check over random traffic with PARA") {
  const dram::DramConfig cfg;
  auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  Controller c(cfg, {}, std::make_unique<mitigation::Para>(cfg, map, 0.3, 9));
  std::map<std::uint32_t, Cycle> last_row_cycle;
  std::uint64_t checked = 0;
  c.add_sink([&](const dram::Command& cmd) {
    if (cmd.kind != dram::CommandKind::ACT && cmd.kind != dram::CommandKind::MitigationREF) return;
    const auto b = cmd.target.flat_bank(cfg);
    auto it = last_row_cycle.find(b);
    if (it != last_row_cycle.end()) {
      CHECK(cmd.issue_cycle - it->second >= cfg.t_rc());
      ++checked;
    }
    last_row_cycle[b] = cmd.issue_cycle;
  });
  std::mt19937_64 rng(2);
  const auto& m = c.address_map();
  while (c.now() < 200000) {
    if (rng() % 3 == 0) {
      const auto kind = rng() % 4 == 0 ? RequestKind::Write : RequestKind::Read;
      if (c.can_accept(kind)) {
        c.enqueue({kind, address_of(m, rng() % 16, rng() % 64, (rng() % 128) * 64), c.now(), 0, 0});
      }
    }
    c.tick();
  }
  CHECK(checked > 1000);
  CHECK(c.metrics().mitigation_refs > 0);
}

TEST_CASE("bandwidth overhead") {
  const dram::DramConfig cfg;
  auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  auto act_stream = [&](Controller& c) {
    std::uint32_t row = 10;
    while (c.now() < 100000) {
      if (c.can_accept(RequestKind::Read)) {
        c.enqueue({RequestKind::Read, address_of(c.address_map(), 0, row), c.now(), 0, 0});
        row = row == 10 ? 20 : 10;
      }
      c.tick();
    }
  };
  Controller base(cfg, no_refresh());
  act_stream(base);
  CHECK(base.metrics().acts > 0);
  CHECK(base.metrics().bandwidth_overhead() == 0.0);

  // Both neighbors every ACT: 2 t_rc of mitigation per t_rc of demand.
  Controller both(cfg, no_refresh(), mitigation::Para::with_neighbor_probability(cfg, map, 1.0, 1));
  act_stream(both);
  const auto& mt = both.metrics();
  CHECK(mt.mitigation_refs >= 2 * mt.acts - 2);
  CHECK(mt.mitigation_refs <= 2 * mt.acts);
  CHECK(mt.bandwidth_overhead() == doctest::Approx(2.0 / 3.0).epsilon(1e-3));

  // p = 1 is one neighbor per ACT on average: overhead 1/2.
  Controller para(cfg, no_refresh(), std::make_unique<mitigation::Para>(cfg, map, 1.0, 1));
  act_stream(para);
  CHECK(para.metrics().bandwidth_overhead() == doctest::Approx(0.5).epsilon(0.05));
  CHECK(Metrics{}.bandwidth_overhead() == 0.0);
}

TEST_CASE("PARA overhead grows as hc_first falls") {
  const dram::DramConfig cfg;
  auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  double prev = -1.0;
  for (std::uint32_t hc : {200000u, 32768u, 4800u, 1024u, 128u}) {
    mitigation::MechanismParams mp;
    mp.mechanism = mitigation::Mechanism::PARA;
    mp.hc_first = hc;
    mp.seed = 4;
    Controller c(cfg, {}, mitigation::make_policy(mp, cfg, map));
    std::mt19937_64 rng(8);
    while (c.now() < 300000) {
      if (c.can_accept(RequestKind::Read)) {
        c.enqueue({RequestKind::Read, address_of(c.address_map(), rng() % 16, rng() % 4096), c.now(), 0, 0});
      }
      c.tick();
    }
    const double o = c.metrics().bandwidth_overhead();
    CHECK(o >= prev);
    prev = o;
  }
  CHECK(prev > 0.3);
}

TEST_CASE("increased refresh charges the extra REFs") {
  const dram::DramConfig cfg;
  auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  Controller c(cfg, {}, std::make_unique<mitigation::IncreasedRefresh>(cfg, map, 32768));
  CHECK(c.refresh_interval() < cfg.t_refi());
  while (c.now() < 50000) c.tick();
  const auto& mt = c.metrics();
  CHECK(mt.refs == static_cast<std::uint64_t>(50000 / c.refresh_interval()));
  const double share = 1.0 - double(c.refresh_interval()) / double(cfg.t_refi());
  CHECK(mt.bandwidth_overhead() == doctest::Approx(share).epsilon(1e-3));
}

TEST_CASE("security accounting sees the issued command stream") {
  const dram::DramConfig cfg;
  auto map = dram::RowMapping::identity(cfg.rows_per_bank);
  const dram::BankTiming timing = dram::BankTiming::from(cfg);
  for (auto mech : {mitigation::Mechanism::Ideal, mitigation::Mechanism::TWiCeIdeal, mitigation::Mechanism::None}) {
    const std::uint32_t hc = 256;
    mitigation::MechanismParams mp;
    mp.mechanism = mech;
    mp.hc_first = hc;
    Controller c(cfg, {}, mitigation::make_policy(mp, cfg, map));
    mitigation::ExposureTracker tracker(cfg, map, hc);
    c.add_sink([&](const dram::Command& cmd) {
      const auto b = cmd.target.flat_bank(cfg);
      switch (cmd.kind) {
        case dram::CommandKind::ACT: tracker.on_activate(b, cmd.target.row); break;
        case dram::CommandKind::MitigationREF: tracker.on_refresh(b, cmd.target.row); break;
        case dram::CommandKind::REF: {
          const auto r = dram::ref_batch_rows(timing, cmd.ref_batch);
          tracker.on_ref(r.first, r.last);
          break;
        }
        default: break;
      }
    });
    std::uint32_t row = 999;
    while (c.now() < 200000) {
      if (c.can_accept(RequestKind::Read)) {
        c.enqueue({RequestKind::Read, address_of(c.address_map(), 3, row), c.now(), 0, 0});
        row = row == 999 ? 1001 : 999;
      }
      c.tick();
    }
    tracker.settle_all();
    if (mech == mitigation::Mechanism::None) {
      CHECK(tracker.failed());
    } else {
      CHECK_FALSE(tracker.failed());
      CHECK(tracker.max_exposure() <= hc);
    }
  }
}

}  // TEST_SUITE

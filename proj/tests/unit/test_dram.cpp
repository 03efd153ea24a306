#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "rhsim/dram/bank.hpp"
#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"

using namespace rhsim;
using namespace rhsim::dram;

namespace {

std::vector<std::pair<int, std::uint32_t>> as_pairs(const NeighborList& l) {
  std::vector<std::pair<int, std::uint32_t>> out;
  for (const auto& n : l) out.emplace_back(n.offset, n.row);
  return out;
}

Command cmd(CommandKind k, std::uint32_t row = 0) {
  Command c;
  c.kind = k;
  c.target.row = row;
  return c;
}

}  // namespace

TEST_SUITE("dram") {

TEST_CASE("default timings per standard") {
  CHECK(DramConfig::defaults_for(DramType::DDR3).t_rc_ns == 52.5);
  CHECK(DramConfig::defaults_for(DramType::DDR4).t_rc_ns == 50.0);
  CHECK(DramConfig::defaults_for(DramType::LPDDR4).t_rc_ns == 60.0);
  for (auto t : {DramType::DDR3, DramType::DDR4, DramType::LPDDR4}) {
    DramConfig c = DramConfig::defaults_for(t);
    CHECK_NOTHROW(c.validate());
    CHECK(c.refs_per_window() == 8192);
  }
  DramConfig c;
  CHECK(c.t_rc() == 60);
  CHECK(c.t_refi() == 9375);
  CHECK(c.rows_per_ref() == 2);
  CHECK(DramConfig::defaults_for(DramType::DDR3).t_rc() == 42);
}

TEST_CASE("config validation") {
  DramConfig c;
  c.rows_per_bank = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = DramConfig{};
  c.t_ras_ns = 49;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("adjacent rows, identity") {
  auto m = RowMapping::identity(1024);
  CHECK(as_pairs(m.adjacent_rows(100, 1)) ==
        std::vector<std::pair<int, std::uint32_t>>{{-1, 99}, {1, 101}});
  CHECK(as_pairs(m.adjacent_rows(0, 1)) == std::vector<std::pair<int, std::uint32_t>>{{1, 1}});
  CHECK(as_pairs(m.adjacent_rows(1023, 2)) ==
        std::vector<std::pair<int, std::uint32_t>>{{-2, 1021}, {-1, 1022}});
  CHECK_THROWS_AS(m.adjacent_rows(1024, 1), RangeError);
  CHECK_THROWS_AS(m.adjacent_rows(5, 0), RangeError);
}

TEST_CASE("adjacent rows, paired wordline") {
  auto m = RowMapping::paired_wordline(1024, 0);
  CHECK(as_pairs(m.adjacent_rows(4, 1)) ==
        std::vector<std::pair<int, std::uint32_t>>{{-1, 2}, {1, 6}});
  CHECK(as_pairs(m.adjacent_rows(5, 1)) ==
        std::vector<std::pair<int, std::uint32_t>>{{-1, 2}, {1, 6}});
  CHECK(m.wordline(4) == m.wordline(5));

  auto shifted = RowMapping::paired_wordline(1024, 1);
  CHECK(shifted.wordline(5) == shifted.wordline(6));
  CHECK(shifted.wordline(0) != shifted.wordline(1));
  CHECK(shifted.canonical_row(shifted.wordline(5)) == 6);
}

TEST_CASE("mappings are bijections and neighbors stay in range") {
  std::vector<RowMapping> maps = {RowMapping::identity(257), RowMapping::paired_wordline(257, 0),
                                  RowMapping::paired_wordline(257, 1),
                                  RowMapping::permuted(257, 42)};
  for (const auto& m : maps) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (std::uint32_t r = 0; r < m.rows(); ++r) {
      const auto p = m.to_physical(r);
      CHECK(m.to_logical(p) == r);
      seen.insert({p.wordline, p.slot});
      for (const auto& n : m.adjacent_rows(r, 6)) {
        CHECK(n.row < m.rows());
        CHECK(n.offset != 0);
        CHECK(static_cast<std::int64_t>(m.wordline(n.row)) -
                  static_cast<std::int64_t>(m.wordline(r)) ==
              n.offset);
      }
    }
    CHECK(seen.size() == m.rows());
  }
}

TEST_CASE("permuted mapping is deterministic per seed") {
  auto a = RowMapping::permuted(512, 7);
  auto b = RowMapping::permuted(512, 7);
  auto c = RowMapping::permuted(512, 8);
  CHECK(*a.table() == *b.table());
  CHECK(*a.table() != *c.table());
  CHECK_THROWS_AS(RowMapping::from_table({0, 0, 1}), RangeError);
}

TEST_CASE("ACT boundary at t_rc") {
  DramConfig cfg;
  auto t = BankTiming::from(cfg);
  BankState s(cfg.rows_per_bank);
  apply(s, cmd(CommandKind::ACT, 3), 1000, t);
  apply(s, cmd(CommandKind::PRE, 3), 1000 + t.t_ras, t);
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::ACT, 4), 1000 + t.t_rc - 1, t));
  CHECK(timing_allows(s, cmd(CommandKind::ACT, 4), 1000 + t.t_rc, t));
  CHECK_THROWS_AS(apply(s, cmd(CommandKind::ACT, 4), 1000 + t.t_rc - 1, t), ProtocolViolation);
}

TEST_CASE("ACT/PRE open-row transitions and column commands") {
  DramConfig cfg;
  auto t = BankTiming::from(cfg);
  BankState s(cfg.rows_per_bank);
  CHECK_FALSE(s.open_row.has_value());
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::RD, 5), 0, t));
  apply(s, cmd(CommandKind::ACT, 5), 0, t);
  CHECK(s.open_row == 5u);
  CHECK(s.activation_epoch(5) == 1);
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::RD, 5), t.t_rcd - 1, t));
  CHECK(timing_allows(s, cmd(CommandKind::RD, 5), t.t_rcd, t));
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::WR, 6), t.t_rcd, t));
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::ACT, 6), t.t_rc, t));
  apply(s, cmd(CommandKind::PRE), t.t_ras, t);
  CHECK_FALSE(s.open_row.has_value());
}

TEST_CASE("MitigationREF refreshes exactly one row") {
  DramConfig cfg;
  auto t = BankTiming::from(cfg);
  BankState s(cfg.rows_per_bank);
  apply(s, cmd(CommandKind::MitigationREF, 7), 500, t);
  CHECK(s.last_refresh_cycle(7) == 500);
  CHECK(s.last_refresh_cycle(6) == 0);
  CHECK(s.last_refresh_cycle(8) == 0);
  CHECK_FALSE(timing_allows(s, cmd(CommandKind::ACT, 1), 500 + t.t_rc - 1, t));
}

TEST_CASE("sustained ACT stream reaches 1/t_rc") {
  DramConfig cfg = DramConfig::defaults_for(DramType::LPDDR4);
  auto t = BankTiming::from(cfg);
  BankState s(cfg.rows_per_bank);
  std::int64_t acts = 0;
  const Cycle window = cfg.ns_to_cycles(32e6);
  for (Cycle now = 0; now < window; ++now) {
    auto a = cmd(CommandKind::ACT, acts % 2 ? 99 : 101);
    if (s.open_row && timing_allows(s, cmd(CommandKind::PRE), now, t)) {
      apply(s, cmd(CommandKind::PRE), now, t);
    } else if (timing_allows(s, a, now, t)) {
      apply(s, a, now, t);
      ++acts;
    }
  }
  // 32 ms at 60 ns per ACT.
  CHECK(acts == (window + t.t_rc - 1) / t.t_rc);
  CHECK(acts >= 533333);
  CHECK(acts / 2 >= 150000);
}

TEST_CASE("refresh_due boundary") {
  DramConfig cfg;
  CHECK(refresh_due(cfg, 1000 + cfg.t_refi(), 1000));
  CHECK_FALSE(refresh_due(cfg, 1000 + cfg.t_refi() - 1, 1000));
  CHECK_FALSE(refresh_due(cfg, 1000, 1000));
}

TEST_CASE("one window of REFs refreshes every row exactly once") {
  for (std::uint32_t rows : {16384u, 1024u, 20000u, 3u}) {
    DramConfig cfg;
    cfg.rows_per_bank = rows;
    auto t = BankTiming::from(cfg);
    BankState s(rows);
    std::vector<int> hits(rows, 0);
    Cycle last_ref = 0;
    std::uint32_t issued = 0;
    for (Cycle now = 1; now <= cfg.t_refw(); ++now) {
      if (!refresh_due(cfg, now, last_ref)) continue;
      Command c = cmd(CommandKind::REF);
      c.ref_batch = issued % cfg.refs_per_window();
      apply(s, c, now, t);
      const auto r = ref_batch_rows(t, c.ref_batch);
      for (auto row = r.first; row < r.last; ++row) ++hits[row];
      last_ref = now;
      ++issued;
    }
    CHECK(issued == 8192);
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    for (std::uint32_t row = 0; row < rows; ++row) CHECK(s.last_refresh_cycle(row) > 0);
  }
}

}  // TEST_SUITE

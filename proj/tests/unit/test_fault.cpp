#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "doctest.h"
#include "rhsim/fault/chip.hpp"
#include "rhsim/fault/ecc.hpp"
#include "rhsim/fault/profile.hpp"
#include "rhsim/fault/profile_io.hpp"

using namespace rhsim;
using namespace rhsim::fault;

namespace {

// Dense parity-check matrix decoder used as an independent reference.
struct DenseSec {
  std::uint32_t n = 0, k = 0, r = 0;
  std::vector<std::vector<std::uint8_t>> h;  // r x n

  explicit DenseSec(const SecCode& code)
      : n(code.codeword_bits()), k(code.data_bits()), r(code.check_bits()), h(r, std::vector<std::uint8_t>(n)) {
    for (std::uint32_t c = 0; c < n; ++c) {
      for (std::uint32_t i = 0; i < r; ++i) h[i][c] = code.column(c) >> i & 1u;
    }
  }

  std::vector<std::uint8_t> syndrome(const std::vector<std::uint8_t>& word) const {
    std::vector<std::uint8_t> s(r, 0);
    for (std::uint32_t i = 0; i < r; ++i) {
      for (std::uint32_t c = 0; c < n; ++c) s[i] ^= h[i][c] & word[c];
    }
    return s;
  }

  // Full codeword with check bits solved so that H * c = 0.
  std::vector<std::uint8_t> encode(const Bits& data) const {
    std::vector<std::uint8_t> c(n, 0);
    std::copy(data.begin(), data.end(), c.begin());
    auto s = syndrome(c);
    for (std::uint32_t i = 0; i < r; ++i) c[k + i] = s[i];
    return c;
  }

  // Flip the unique column equal to the syndrome, if any.
  std::vector<std::uint8_t> decode(std::vector<std::uint8_t> word) const {
    const auto s = syndrome(word);
    if (std::all_of(s.begin(), s.end(), [](auto b) { return b == 0; })) return word;
    for (std::uint32_t c = 0; c < n; ++c) {
      bool match = true;
      for (std::uint32_t i = 0; i < r && match; ++i) match = h[i][c] == s[i];
      if (match) {
        word[c] ^= 1u;
        break;
      }
    }
    return word;
  }
};

Bits random_bits(std::uint32_t n, std::mt19937_64& rng) {
  Bits b(n);
  for (auto& x : b) x = rng() & 1u;
  return b;
}

std::uint32_t parity_of(const std::vector<std::uint8_t>& codeword, std::uint32_t k, std::uint32_t r) {
  std::uint32_t p = 0;
  for (std::uint32_t i = 0; i < r; ++i) p |= std::uint32_t{codeword[k + i]} << i;
  return p;
}

ProfileSpec small_spec(std::uint32_t hmin, std::uint64_t seed = 3) {
  ProfileSpec s;
  s.label = "test";
  s.hc_first_min = hmin;
  s.seed = seed;
  return s;
}

std::shared_ptr<const VulnerabilityProfile> make(const ProfileSpec& s) {
  return std::make_shared<const VulnerabilityProfile>(generate_profile(s));
}

}  // namespace

TEST_SUITE("fault") {

TEST_CASE("SEC code shape") {
  SecCode toy(16);
  CHECK(toy.check_bits() == 5);
  SecCode full(128);
  CHECK(full.check_bits() == 8);
  std::set<std::uint32_t> cols;
  for (std::uint32_t p = 0; p < full.codeword_bits(); ++p) {
    CHECK(full.column(p) != 0);
    cols.insert(full.column(p));
  }
  CHECK(cols.size() == full.codeword_bits());
}

TEST_CASE("toy SEC decode matches dense reference for 0, 1 and 2 flips") {
  SecCode code(16);
  DenseSec ref(code);
  std::mt19937_64 rng(11);
  const std::uint32_t n = code.codeword_bits();
  std::map<std::size_t, int> hist_impl, hist_ref;
  for (int trial = 0; trial < 4; ++trial) {
    const Bits data = random_bits(16, rng);
    const auto cw = ref.encode(data);
    const auto parity = parity_of(cw, 16, code.check_bits());
    CHECK(parity == code.encode(data));

    std::vector<std::vector<std::uint32_t>> injections = {{}};
    for (std::uint32_t a = 0; a < n; ++a) {
      injections.push_back({a});
      for (std::uint32_t b = a + 1; b < n; ++b) injections.push_back({a, b});
    }
    for (const auto& inj : injections) {
      auto word = cw;
      for (auto p : inj) word[p] ^= 1u;
      const auto decoded = ref.decode(word);
      const Bits expect(decoded.begin(), decoded.begin() + 16);

      const auto got = on_die_ecc_decode(code, data, parity, inj);
      CHECK(got.observed == expect);

      std::size_t wrong = 0;
      for (std::uint32_t i = 0; i < 16; ++i) wrong += expect[i] != data[i];
      if (inj.empty()) {
        CHECK(got.action == EccAction::unchanged);
      } else if (inj.size() == 1) {
        CHECK(got.action == EccAction::corrected);
        CHECK(wrong == 0);
      } else {
        hist_ref[wrong]++;
        hist_impl[visible_errors(code, inj).size()]++;
        std::size_t data_flips = 0;
        for (auto p : inj) data_flips += p < 16;
        // Two flips can never be fixed: the decoder leaves them, or adds a third.
        CHECK(got.action != EccAction::corrected);
        CHECK(wrong >= data_flips);
        CHECK(wrong <= data_flips + 1);
      }
      CHECK(visible_errors(code, inj).size() == wrong);
    }
  }
  CHECK(hist_impl == hist_ref);
  CHECK(hist_ref[3] > 0);
}

TEST_CASE("128-bit code corrects every single flip") {
  SecCode code(128);
  std::mt19937_64 rng(5);
  const Bits data = random_bits(128, rng);
  const auto parity = code.encode(data);
  for (std::uint32_t p = 0; p < code.codeword_bits(); ++p) {
    const auto r = on_die_ecc_decode(code, data, parity, {p});
    CHECK(r.observed == data);
    CHECK(r.action == EccAction::corrected);
  }
  CHECK(on_die_ecc_decode(code, data, parity, {}).observed == data);
}

TEST_CASE("generated profile hits its minimum exactly once") {
  auto spec = bundled_profile_spec("LPDDR4-1y/MfrA");
  const auto p = generate_profile(spec);
  CHECK(p.hc_first_min() == 4800);
  CHECK(p.cells.front().threshold == 4800);
  CHECK(std::count_if(p.cells.begin(), p.cells.end(),
                      [](const VulnerableCell& c) { return c.threshold == 4800; }) == 1);
  CHECK(std::is_sorted(p.cells.begin(), p.cells.end(),
                       [](const auto& a, const auto& b) { return a.threshold < b.threshold; }));
  for (const auto& c : p.cells) {
    CHECK(c.bit_index < p.bits_per_row());
    CHECK(c.threshold >= 4800);
    CHECK(c.side == side_for_offset(c.offset));
  }
  CHECK(std::any_of(p.cells.begin(), p.cells.end(), [](const auto& c) { return c.offset == -6; }));
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate_profile(small_spec(20000, 9));
  const auto b = generate_profile(small_spec(20000, 9));
  const auto c = generate_profile(small_spec(20000, 10));
  REQUIRE(a.cells.size() == b.cells.size());
  bool same = true;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    same = same && a.cells[i].row == b.cells[i].row && a.cells[i].bit_index == b.cells[i].bit_index &&
           a.cells[i].threshold == b.cells[i].threshold && a.cells[i].patterns == b.cells[i].patterns;
  }
  CHECK(same);
  CHECK((a.cells[1].row != c.cells[1].row || a.cells[1].bit_index != c.cells[1].bit_index));
}

TEST_CASE("degenerate single-cell profile") {
  auto s = small_spec(7000);
  s.max_cells = 1;
  const auto p = generate_profile(s);
  REQUIRE(p.cells.size() == 1);
  for (std::uint64_t hc : {7000u, 20000u, 150000u}) CHECK(cells_at_or_below(p, hc) == 1);
  CHECK(cells_at_or_below(p, 6999) == 0);
}

TEST_CASE("infeasible curve is rejected") {
  auto s = small_spec(1000);
  s.rate_exp = 20;
  CHECK_THROWS_AS(generate_profile(s), InfeasibleError);
  auto bad = small_spec(1000);
  bad.offset_weights = {{0, 0.5}, {2, 0.6}};
  CHECK_THROWS_AS(generate_profile(bad), ConfigError);
  bad.offset_weights = {{0, 0.4}, {2, 0.6}};
  CHECK_THROWS_AS(generate_profile(bad), ConfigError);
  bad.offset_weights = {{1, 1.0}};
  CHECK_THROWS_AS(generate_profile(bad), ConfigError);
}

TEST_CASE("fitted exponent recovers k from threshold counts") {
  for (std::uint32_t hmin : {4800u, 10000u}) {
    const auto p = generate_profile(small_spec(hmin, hmin));
    std::vector<std::pair<double, double>> pts;
    const double lo = std::log(2.0 * hmin), hi = std::log(150000.0);
    for (int i = 0; i < 10; ++i) {
      const double hc = std::exp(lo + (hi - lo) * i / 9.0);
      pts.emplace_back(hc, static_cast<double>(cells_at_or_below(p, static_cast<std::uint64_t>(hc))));
    }
    const auto fit = fit_power_law(pts);
    CHECK(fit.k == doctest::Approx(p.rate_exp).epsilon(0.05));
  }
}

TEST_CASE("doubling HC multiplies flips by about 2^k") {
  const auto p = generate_profile(small_spec(4800, 21));
  for (std::uint64_t ha : {15000u, 30000u, 60000u}) {
    const double ratio = static_cast<double>(cells_at_or_below(p, 2 * ha)) /
                         static_cast<double>(cells_at_or_below(p, ha));
    CHECK(ratio == doctest::Approx(std::pow(2.0, p.rate_exp)).epsilon(0.1));
  }
}

TEST_CASE("expected flip rate curve") {
  const auto p = generate_profile(small_spec(10000));
  CHECK(expected_flip_rate(p, 9999) == 0.0);
  CHECK(expected_flip_rate(p, 10000) == doctest::Approx(1.0 / p.total_bits()));
  CHECK(expected_flip_rate(p, p.hc_star) == doctest::Approx(1e-6).epsilon(1e-6));
  std::vector<std::pair<double, double>> pts;
  for (double hc = 10000; hc <= 150000; hc += 10000) pts.emplace_back(hc, expected_flip_rate(p, hc));
  const auto fit = fit_power_law(pts);
  CHECK(fit.r2 >= 0.99);
  CHECK(fit.k == doctest::Approx(p.rate_exp));
}

TEST_CASE("no single pattern covers every cell") {
  for (const auto& spec : bundled_profile_specs()) {
    const auto p = generate_profile(spec);
    CHECK(p.spec.on_die_ecc == (spec.dram_type == dram::DramType::LPDDR4));
    CHECK(p.cells.front().patterns.contains(spec.worst_pattern));
    if (p.cells.size() < 2) continue;
    for (auto dp : kAllPatterns) {
      CHECK_FALSE(std::all_of(p.cells.begin(), p.cells.end(),
                              [dp](const auto& c) { return c.patterns.contains(dp); }));
    }
  }
  CHECK(bundled_profile_specs().size() == 16);
}

TEST_CASE("profile JSON round trip") {
  const auto p = generate_profile(bundled_profile_spec("DDR4-new/MfrA"));
  for (bool with_cells : {false, true}) {
    const auto q = profile_from_json(nlohmann::json::parse(profile_to_json(p, with_cells).dump()));
    REQUIRE(q.cells.size() == p.cells.size());
    CHECK(q.rate_exp == doctest::Approx(p.rate_exp));
    for (std::size_t i = 0; i < p.cells.size(); i += 97) {
      CHECK(q.cells[i].row == p.cells[i].row);
      CHECK(q.cells[i].bit_index == p.cells[i].bit_index);
      CHECK(q.cells[i].threshold == p.cells[i].threshold);
      CHECK(q.cells[i].patterns == p.cells[i].patterns);
    }
  }
  auto j = profile_to_json(p, false);
  j["spec"]["bogus"] = 1;
  CHECK_THROWS_AS(profile_from_json(j), ConfigError);
}

TEST_CASE("hammer below the minimum flips nothing") {
  auto prof = make(bundled_profile_spec("LPDDR4-1y/MfrA"));
  const auto& first = prof->cells.front();
  const auto victim = prof->mapping().canonical_row(prof->mapping().wordline(first.row) - first.offset);
  for (auto dp : kAllPatterns) {
    ChipState chip(prof);
    CHECK(hammer(chip, victim, 4799, dp).empty());
  }
}

TEST_CASE("planted cell flips exactly at its threshold") {
  auto s = small_spec(5000);
  s.max_cells = 1;
  s.worst_pattern = DataPattern::RS0;
  s.worst_pattern_prob = 1.0;
  s.other_pattern_prob = 0.0;
  auto prof = make(s);
  const auto& cell = prof->cells.front();
  const auto victim = cell.row;
  {
    ChipState chip(prof);
    CHECK(hammer(chip, victim, 4999, DataPattern::RS0).empty());
  }
  {
    ChipState chip(prof);
    const auto flips = hammer(chip, victim, 5000, DataPattern::RS0);
    REQUIRE(flips.size() == 1);
    CHECK(flips.begin()->row == cell.row);
    CHECK(flips.begin()->bit_index == cell.bit_index);
    CHECK(flips.begin()->observed_value == 1);  // RS0 stores zeros in the victim
  }
  {
    ChipState chip(prof);
    CHECK(hammer(chip, victim, 5000, DataPattern::CH0).empty());
  }
}

TEST_CASE("refresh resets exposure") {
  auto s = small_spec(5000);
  s.max_cells = 1;
  auto prof = make(s);
  const auto victim = prof->cells.front().row;
  ChipState chip(prof);
  const auto agg = chip.mapping().adjacent_rows(victim, 1);
  chip.write_pattern(s.worst_pattern, victim);
  chip.activate_pair(agg[0].row, agg[1].row, 4999);
  chip.refresh_row(victim);
  chip.activate_pair(agg[0].row, agg[1].row, 4999);
  CHECK(chip.read_row(victim).empty());
  chip.activate_pair(agg[0].row, agg[1].row, 1);
  CHECK(chip.read_row(victim).size() == 1);
}

TEST_CASE("bulk pair hammer equals the explicit loop") {
  auto prof = make(small_spec(4800));
  ChipState bulk(prof), loop(prof);
  for (std::uint32_t a : {100u, 103u, 10u}) {
    const std::uint32_t b = a + 2;
    bulk.activate_pair(a, b, 777);
    for (int i = 0; i < 777; ++i) {
      loop.activate(a);
      loop.activate(b);
    }
  }
  bulk.activate(50, 9);
  for (int i = 0; i < 9; ++i) loop.activate(50);
  for (const auto& c : prof->cells) CHECK(bulk.exposure(c) == loop.exposure(c));
  CHECK(bulk.activation_count() == loop.activation_count());
}

TEST_CASE("aggressor rows never flip and DDR4 flips stay within two rows") {
  auto prof = make(bundled_profile_spec("DDR4-new/MfrA"));
  const auto mapping = prof->mapping();
  for (std::uint32_t victim = 1; victim < 200; ++victim) {
    ChipState chip(prof);
    const auto flips = hammer(chip, victim, 150000, prof->spec.worst_pattern);
    for (const auto& f : flips) {
      const auto d = static_cast<int>(mapping.wordline(f.row)) - static_cast<int>(mapping.wordline(victim));
      CHECK(std::abs(d) <= 2);
      CHECK(std::abs(d) != 1);
    }
  }
}

TEST_CASE("flip sets grow monotonically with HC without ECC") {
  auto prof = make(bundled_profile_spec("DDR4-old/MfrA"));
  for (std::uint32_t victim : {3u, 77u, 500u, 901u}) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> prev;
    for (std::uint32_t hc = 10000; hc <= 150000; hc += 10000) {
      ChipState chip(prof);
      std::set<std::pair<std::uint32_t, std::uint32_t>> cur;
      for (const auto& f : hammer(chip, victim, hc, DataPattern::RS1)) cur.insert({f.row, f.bit_index});
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST_CASE("core loop longer than 32 ms is refused") {
  auto prof = make(bundled_profile_spec("LPDDR4-1y/MfrA"));
  ChipState chip(prof);
  CHECK_NOTHROW(hammer(chip, 10, 150000, DataPattern::RS1));
  CHECK_THROWS_AS(hammer(chip, 10, 270000, DataPattern::RS1), RangeError);
}

}  // TEST_SUITE

#include "rhsim/characterize/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rhsim/common.hpp"

namespace rhsim::characterize {

namespace {

constexpr std::int64_t kReadRadius = 7;
constexpr std::int64_t kRestoreRadius = 8;

dram::RowMapping mapping_or_identity(const std::optional<dram::RowMapping>& m, const ChipPort& chip) {
  if (m) {
    if (m->rows() != chip.rows()) throw ConfigError("mapping hypothesis does not match the chip's row count");
    return *m;
  }
  return dram::RowMapping::identity(chip.rows());
}

template <typename F>
void for_rows_near(const dram::RowMapping& mapping, std::uint32_t victim, std::int64_t radius, F&& f) {
  const std::int64_t vw = mapping.wordline(victim);
  for (std::int64_t w = std::max<std::int64_t>(0, vw - radius);
       w <= std::min<std::int64_t>(mapping.wordlines() - 1, vw + radius); ++w) {
    const auto wl = static_cast<std::uint32_t>(w);
    for (std::uint32_t s = 0; s < mapping.rows_on_wordline(wl); ++s) f(mapping.to_logical({wl, s}));
  }
}

void check_core_loop(const ChipPort& chip, std::uint32_t hc) {
  if (!fault::fits_core_loop(chip.timing(), 2 * std::uint64_t{hc})) {
    throw RangeError("hammer count " + std::to_string(hc) + " does not fit the 32 ms core-loop bound");
  }
}

std::pair<std::uint32_t, std::uint32_t> row_range(const ChipPort& chip, std::uint32_t first, std::uint32_t last) {
  if (last == 0) last = chip.rows();
  if (first >= last || last > chip.rows()) throw RangeError("victim row range out of bounds");
  return {first, last};
}

/// Smallest multiple of `step` in (0, cap] for which `flips` holds, using
/// a coarse pass and then bisection.
std::optional<std::uint32_t> search(std::uint32_t step, std::uint32_t coarse, std::uint32_t cap,
                                    const std::function<bool(std::uint32_t)>& flips) {
  if (step == 0) throw RangeError("step must be at least 1");
  coarse = std::max(step, (coarse + step - 1) / step * step);
  std::uint32_t lo = 0;  // known to produce no flip (0 trivially)
  std::optional<std::uint32_t> hi;
  for (std::uint64_t h = coarse;; h += coarse) {
    const auto hc = static_cast<std::uint32_t>(std::min<std::uint64_t>(h, cap));
    if (flips(hc)) {
      hi = hc;
      break;
    }
    lo = hc;
    if (hc >= cap) break;
  }
  if (!hi) return std::nullopt;
  // Invariant: lo fails, hi succeeds. Candidates are multiples of step.
  std::uint32_t m_lo = lo / step;  // m_lo * step <= lo fails
  std::uint32_t m_hi = (*hi + step - 1) / step;
  if (std::uint64_t{m_hi} * step > *hi) {
    // hi itself is not on the grid (only at the cap); check the grid point below it.
    if (m_hi - 1 > m_lo && flips((m_hi - 1) * step)) {
      m_hi -= 1;
    } else {
      return *hi;
    }
  }
  while (m_hi - m_lo > 1) {
    const std::uint32_t mid = m_lo + (m_hi - m_lo) / 2;
    if (flips(mid * step)) {
      m_hi = mid;
    } else {
      m_lo = mid;
    }
  }
  return m_hi * step;
}

}  // namespace

std::string FlipDatabase::to_csv() const {
  std::ostringstream os;
  os << "pattern,hc,row,bit,iteration\n";
  for (const auto& f : flips_) {
    os << fault::to_string(f.data_pattern) << ',' << f.hc << ',' << f.row << ',' << f.bit << ',' << f.iteration
       << '\n';
  }
  return os.str();
}

void FlipDatabase::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_csv();
}

std::vector<Flip> test_row(ChipPort& chip, const dram::RowMapping& mapping, std::uint32_t victim,
                           std::uint32_t hc, fault::DataPattern dp, std::uint32_t iteration) {
  check_core_loop(chip, hc);
  const auto aggressors = mapping.adjacent_rows(victim, 1);
  chip.set_iteration(iteration);
  chip.write_pattern(dp, victim);
  chip.set_refresh(false);
  chip.refresh_row(victim);
  if (aggressors.size() == 2) {
    chip.hammer(aggressors[0].row, aggressors[1].row, hc);
  } else if (aggressors.size() == 1) {
    chip.hammer(aggressors[0].row, std::nullopt, hc);
  }
  chip.set_refresh(true);
  std::vector<Flip> out;
  for_rows_near(mapping, victim, kReadRadius, [&](std::uint32_t row) {
    for (const auto& f : chip.read_row(row)) out.push_back({dp, hc, row, f.bit_index, iteration, f.observed_value, victim});
  });
  for_rows_near(mapping, victim, kRestoreRadius, [&](std::uint32_t row) { chip.restore_row(row); });
  return out;
}

FlipDatabase run_characterization(ChipPort& chip, const CharacterizationOptions& opts) {
  if (opts.hc_sweep.empty()) throw ConfigError("hc sweep is empty");
  if (opts.patterns.empty()) throw ConfigError("no data patterns given");
  if (opts.iterations == 0) throw ConfigError("iterations must be at least 1");
  for (auto hc : opts.hc_sweep) check_core_loop(chip, hc);
  const auto mapping = mapping_or_identity(opts.mapping, chip);
  const auto [first, last] = row_range(chip, opts.first_row, opts.last_row);

  FlipDatabase db;
  db.meta = {opts.profile_label, opts.patterns, opts.hc_sweep, opts.iterations, opts.seed};
  for (std::uint32_t it = 0; it < opts.iterations; ++it) {
    for (auto dp : opts.patterns) {
      for (std::uint32_t row = first; row < last; ++row) {
        for (auto hc : opts.hc_sweep) {
          for (const auto& f : test_row(chip, mapping, row, hc, dp, it)) db.add(f);
        }
      }
    }
  }
  return db;
}

double coverage(const FlipDatabase& db, fault::DataPattern dp) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> all;
  std::set<std::pair<std::uint32_t, std::uint32_t>> mine;
  for (const auto& f : db.flips()) {
    all.insert({f.row, f.bit});
    if (f.data_pattern == dp) mine.insert({f.row, f.bit});
  }
  if (all.empty()) throw RangeError("coverage is undefined for a database without flips");
  return static_cast<double>(mine.size()) / static_cast<double>(all.size());
}

HcFirstResult find_hc_first(ChipPort& chip, const HcSearchOptions& opts) {
  if (opts.patterns.empty()) throw ConfigError("no data patterns given");
  const auto mapping = mapping_or_identity(opts.mapping, chip);
  if (opts.row && *opts.row >= chip.rows()) throw RangeError("row out of range");
  std::uint32_t cap = opts.cap;
  while (cap > 0 && !fault::fits_core_loop(chip.timing(), 2 * std::uint64_t{cap})) --cap;

  HcFirstResult r;
  auto flips = [&](std::uint32_t hc) {
    for (auto dp : opts.patterns) {
      const std::uint32_t first = opts.row.value_or(0);
      const std::uint32_t last = opts.row ? *opts.row + 1 : chip.rows();
      for (std::uint32_t row = first; row < last; ++row) {
        ++r.tests;
        if (!test_row(chip, mapping, row, hc, dp).empty()) return true;
      }
    }
    return false;
  };
  if (const auto hc = search(opts.step, opts.coarse_step, cap, flips)) {
    r.rowhammerable = true;
    r.hc = *hc;
  }
  return r;
}

NthWordResult hc_nth_word(ChipPort& chip, std::uint32_t n, std::uint32_t word_bits, const HcSearchOptions& opts) {
  if (n == 0) throw RangeError("n must be at least 1");
  if (word_bits == 0) throw RangeError("word size must be positive");
  if (chip.on_die_ecc()) throw UnsupportedConfig("per-word flip counts are hidden by on-die ECC");
  const auto mapping = mapping_or_identity(opts.mapping, chip);
  std::uint32_t cap = opts.cap;
  while (cap > 0 && !fault::fits_core_loop(chip.timing(), 2 * std::uint64_t{cap})) --cap;

  auto reaches = [&](std::uint32_t hc) {
    for (auto dp : opts.patterns) {
      const std::uint32_t first = opts.row.value_or(0);
      const std::uint32_t last = opts.row ? *opts.row + 1 : chip.rows();
      for (std::uint32_t row = first; row < last; ++row) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> words;
        for (const auto& f : test_row(chip, mapping, row, hc, dp)) {
          if (++words[{f.row, f.bit / word_bits}] >= n) return true;
        }
      }
    }
    return false;
  };
  NthWordResult r;
  r.n = n;
  r.hc = search(opts.step, opts.coarse_step, cap, reaches);
  if (n > 1 && r.hc) {
    const auto prev = hc_nth_word(chip, n - 1, word_bits, opts);
    if (prev.hc) r.multiplier = static_cast<double>(*r.hc) / *prev.hc;
  }
  return r;
}

std::map<int, double> spatial_histogram(const FlipDatabase& db, const dram::RowMapping& mapping,
                                        std::optional<std::uint32_t> hc) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> cells;
  for (const auto& f : db.flips()) {
    if (hc && f.hc != *hc) continue;
    cells.insert({f.victim, f.row, f.bit});
  }
  std::map<int, double> out;
  if (cells.empty()) return out;
  for (const auto& [victim, row, bit] : cells) {
    const auto off = static_cast<int>(mapping.wordline(row)) - static_cast<int>(mapping.wordline(victim));
    out[off] += 1.0;
  }
  for (auto& [off, v] : out) v /= static_cast<double>(cells.size());
  return out;
}

std::map<std::uint32_t, double> word_multiplicity(const FlipDatabase& db, std::uint32_t hc, std::uint32_t word_bits) {
  if (word_bits == 0) throw RangeError("word size must be positive");
  std::map<std::tuple<fault::DataPattern, std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t> words;
  for (const auto& f : db.flips()) {
    if (f.hc == hc) ++words[{f.data_pattern, f.iteration, f.row, f.bit / word_bits}];
  }
  std::map<std::uint32_t, double> out;
  for (const auto& [w, n] : words) out[n] += 1.0;
  for (auto& [n, v] : out) v /= static_cast<double>(words.size());
  return out;
}

std::map<std::uint32_t, double> flip_rate_curve(const FlipDatabase& db, std::uint64_t total_bits) {
  if (total_bits == 0) throw RangeError("total bits must be positive");
  std::map<std::uint32_t, std::set<std::pair<std::uint32_t, std::uint32_t>>> cells;
  for (auto hc : db.meta.hc_sweep) cells[hc];
  for (const auto& f : db.flips()) cells[f.hc].insert({f.row, f.bit});
  std::map<std::uint32_t, double> out;
  for (const auto& [hc, c] : cells) out[hc] = static_cast<double>(c.size()) / static_cast<double>(total_bits);
  return out;
}

std::uint32_t calibration_hc(const fault::VulnerabilityProfile& profile, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw RangeError("rate must be in (0, 1]");
  if (profile.rate_exp <= 0.0) throw ConfigError("profile has no rate curve");
  const double cells = rate * static_cast<double>(profile.total_bits());
  const double hc = profile.hc_first_min() * std::pow(std::max(cells, 1.0), 1.0 / profile.rate_exp);
  return static_cast<std::uint32_t>(std::ceil(hc - 1e-9));
}

MonotonicResult monotonic_fraction(ChipPort& chip, const MonotonicOptions& opts) {
  auto sweep = opts.hc_sweep;
  if (sweep.empty()) {
    for (std::uint32_t hc = 25000; hc <= 150000; hc += 5000) sweep.push_back(hc);
  }
  if (!std::is_sorted(sweep.begin(), sweep.end())) throw ConfigError("hc sweep must be ascending");
  if (opts.iterations == 0) throw ConfigError("iterations must be at least 1");
  for (auto hc : sweep) check_core_loop(chip, hc);
  auto patterns = opts.patterns;
  if (patterns.empty()) patterns.assign(fault::kAllPatterns.begin(), fault::kAllPatterns.end());
  const auto mapping = mapping_or_identity(opts.mapping, chip);
  const auto [first, last] = row_range(chip, opts.first_row, opts.last_row);

  std::map<std::tuple<fault::DataPattern, std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> counts;
  for (std::uint32_t it = 0; it < opts.iterations; ++it) {
    for (auto dp : patterns) {
      for (std::uint32_t row = first; row < last; ++row) {
        for (std::size_t i = 0; i < sweep.size(); ++i) {
          for (const auto& f : test_row(chip, mapping, row, sweep[i], dp, it)) {
            auto& c = counts[{dp, f.row, f.bit}];
            if (c.empty()) c.assign(sweep.size(), 0);
            ++c[i];
          }
        }
      }
    }
  }
  MonotonicResult r;
  r.cells = counts.size();
  for (const auto& [cell, c] : counts) {
    if (std::is_sorted(c.begin(), c.end())) ++r.monotonic_cells;
  }
  if (r.cells > 0) r.percent = 100.0 * static_cast<double>(r.monotonic_cells) / static_cast<double>(r.cells);
  return r;
}

double profiling_time_estimate(double capacity_bytes, double row_size_bytes, double per_row_seconds) {
  if (!(capacity_bytes > 0 && row_size_bytes > 0 && per_row_seconds > 0)) {
    throw RangeError("profiling estimate needs positive inputs");
  }
  return capacity_bytes / row_size_bytes * per_row_seconds;
}

}  // namespace rhsim::characterize

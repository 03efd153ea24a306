#include "rhsim/fault/chip.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "rhsim/common.hpp"

namespace rhsim::fault {

namespace {

constexpr int kRel[] = {-7, -5, -3, -1, 1, 3, 5, 7};
constexpr std::uint32_t kEccWordBits = 128;

}  // namespace

ChipState::ChipState(std::shared_ptr<const VulnerabilityProfile> profile)
    : profile_(std::move(profile)),
      mapping_(profile_->mapping()),
      ecc_(kEccWordBits),
      exposure_(mapping_.wordlines()),
      cells_by_row_(mapping_.rows()) {
  for (auto& e : exposure_) e.fill(0);
  for (std::uint32_t i = 0; i < profile_->cells.size(); ++i) {
    cells_by_row_.at(profile_->cells[i].row).push_back(i);
  }
}

void ChipState::write_pattern(DataPattern dp, std::uint32_t victim) {
  pattern_ = dp;
  pattern_ref_wordline_ = mapping_.wordline(victim);
}

DataPattern ChipState::pattern_of(std::uint32_t row) const {
  return row_pattern(pattern_, mapping_.wordline(row), pattern_ref_wordline_);
}

std::uint8_t ChipState::stored_bit(std::uint32_t row, std::uint32_t bit) const {
  return static_cast<std::uint8_t>(pattern_byte(pattern_of(row)) >> (bit % 8) & 1u);
}

void ChipState::activate(std::uint32_t row, std::uint64_t count) {
  if (count == 0) return;
  const std::int64_t a = mapping_.wordline(row);
  const auto wordlines = static_cast<std::int64_t>(exposure_.size());
  for (int rel : kRel) {
    const std::int64_t p = a - rel;
    if (p >= 0 && p < wordlines) exposure_[p][slot(rel)] += count;
  }
  exposure_[a].fill(0);
  activations_ += count;
}

void ChipState::activate_pair(std::uint32_t a, std::uint32_t b, std::uint64_t count) {
  if (count == 0) return;
  const std::int64_t wa = mapping_.wordline(a);
  const std::int64_t wb = mapping_.wordline(b);
  if (wa == wb) {
    activate(a, 2 * count);
    return;
  }
  const auto wordlines = static_cast<std::int64_t>(exposure_.size());
  for (std::int64_t src : {wa, wb}) {
    for (int rel : kRel) {
      const std::int64_t p = src - rel;
      if (p >= 0 && p < wordlines && p != wa && p != wb) exposure_[p][slot(rel)] += count;
    }
  }
  // The sequence ends with b: a saw one activation of b after its own last
  // activation, b saw none.
  exposure_[wa].fill(0);
  exposure_[wb].fill(0);
  const std::int64_t rel = wb - wa;
  if (rel % 2 != 0 && rel >= -7 && rel <= 7) exposure_[wa][slot(static_cast<int>(rel))] = 1;
  activations_ += 2 * count;
}

void ChipState::refresh_row(std::uint32_t row) { exposure_[mapping_.wordline(row)].fill(0); }

void ChipState::refresh_all() {
  for (auto& e : exposure_) e.fill(0);
}

std::uint64_t ChipState::exposure(const VulnerableCell& cell) const {
  const auto& e = exposure_[mapping_.wordline(cell.row)];
  const std::uint64_t lo = e[slot(-cell.offset - 1)];
  const std::uint64_t hi = e[slot(-cell.offset + 1)];
  const std::uint64_t both = std::min(lo, hi);
  const std::uint64_t one = std::max(lo, hi);
  const std::uint64_t onset = profile_->spec.single_sided_onset;
  return std::max(both, one > onset ? one - onset : 0);
}

std::uint32_t ChipState::effective_threshold(std::uint32_t cell_index, std::uint32_t iteration) const {
  const auto& cell = profile_->cells[cell_index];
  const double jitter = profile_->spec.threshold_jitter;
  if (jitter <= 0.0) return cell.threshold;
  std::mt19937_64 rng(derive_seed(profile_->spec.seed ^ (std::uint64_t{iteration} << 40), cell_index));
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  const double t = cell.threshold * (1.0 + jitter * g);
  return static_cast<std::uint32_t>(std::max(1.0, std::round(t)));
}

std::vector<std::uint32_t> ChipState::raw_flips(std::uint32_t row, std::uint32_t iteration) const {
  std::vector<std::uint32_t> out;
  const DataPattern dp = pattern_of(row);
  for (auto idx : cells_by_row_.at(row)) {
    const auto& cell = profile_->cells[idx];
    if (!cell.patterns.contains(dp)) continue;
    if (exposure(cell) >= effective_threshold(idx, iteration)) out.push_back(cell.bit_index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ReadFlip> ChipState::read_row(std::uint32_t row, std::uint32_t iteration) const {
  const auto raw = raw_flips(row, iteration);
  std::vector<std::uint32_t> visible;
  if (!profile_->spec.on_die_ecc) {
    visible = raw;
  } else {
    std::map<std::uint32_t, std::vector<std::uint32_t>> words;
    for (auto bit : raw) words[bit / kEccWordBits].push_back(bit % kEccWordBits);
    for (const auto& [word, flips] : words) {
      for (auto pos : visible_errors(ecc_, flips)) visible.push_back(word * kEccWordBits + pos);
    }
  }
  std::vector<ReadFlip> out;
  out.reserve(visible.size());
  for (auto bit : visible) {
    out.push_back({bit, static_cast<std::uint8_t>(stored_bit(row, bit) ^ 1u)});
  }
  return out;
}

bool fits_core_loop(const dram::DramConfig& cfg, std::uint64_t acts) {
  return static_cast<double>(acts) * cfg.t_rc_ns < 32.0e6;
}

std::set<FlipRecord> hammer(ChipState& chip, std::uint32_t victim, std::uint32_t hc, DataPattern dp) {
  const auto& mapping = chip.mapping();
  const auto aggressors = mapping.adjacent_rows(victim, 1);
  if (!fits_core_loop(chip.profile().dram_config(), std::uint64_t{hc} * aggressors.size())) {
    throw RangeError("hammer count " + std::to_string(hc) + " exceeds the 32 ms core-loop bound");
  }
  chip.write_pattern(dp, victim);
  if (aggressors.size() == 2) {
    chip.activate_pair(aggressors[0].row, aggressors[1].row, hc);
  } else {
    chip.activate(aggressors[0].row, hc);
  }
  std::set<FlipRecord> out;
  const std::int64_t vw = mapping.wordline(victim);
  for (std::int64_t w = vw - 7; w <= vw + 7; ++w) {
    if (w < 0 || w >= mapping.wordlines()) continue;
    const auto wl = static_cast<std::uint32_t>(w);
    for (std::uint32_t s = 0; s < mapping.rows_on_wordline(wl); ++s) {
      const auto row = mapping.to_logical({wl, s});
      for (const auto& f : chip.read_row(row)) {
        out.insert({dp, hc, row, f.bit_index, f.observed_value, victim});
      }
    }
  }
  return out;
}

}  // namespace rhsim::fault

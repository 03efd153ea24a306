#include "rhsim/fault/profile.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "rhsim/common.hpp"

namespace rhsim::fault {

namespace {

constexpr std::uint64_t kMaxCells = 8'000'000;

int sample_offset(const std::map<int, double>& weights, std::mt19937_64& rng) {
  double u = uniform01(rng);
  int last = 0;
  for (const auto& [offset, w] : weights) {
    last = offset;
    if (u < w) return offset;
    u -= w;
  }
  return last;
}

}  // namespace

std::string_view to_string(CellSide s) {
  switch (s) {
    case CellSide::double_sided: return "double";
    case CellSide::single_upper: return "single-upper";
    case CellSide::single_lower: return "single-lower";
  }
  return "?";
}

CellSide side_for_offset(int offset) {
  if (offset == 0) return CellSide::double_sided;
  return offset > 0 ? CellSide::single_upper : CellSide::single_lower;
}

void ProfileSpec::validate() const {
  auto require = [this](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("profile '" + label + "': " + what);
  };
  require(hc_first_min >= 1, "hc_first_min must be >= 1");
  require(rate_exp >= 0.0, "rate_exp must be >= 0");
  require(anchor_rate > 0.0 && anchor_rate < 1.0, "anchor_rate must be in (0, 1)");
  require(sweep_cap >= 1, "sweep_cap must be >= 1");
  require(rows >= 8, "rows must be >= 8");
  require(row_size_bytes >= 16 && row_size_bytes % 16 == 0,
          "row_size_bytes must be a positive multiple of 16");
  require(!offset_weights.empty(), "offset_weights must not be empty");
  double sum = 0.0;
  for (const auto& [o, w] : offset_weights) {
    require(o % 2 == 0 && o >= -6 && o <= 6, "offsets must be even and within [-6, 6]");
    require(w >= 0.0, "offset weights must be non-negative");
    sum += w;
  }
  require(std::abs(sum - 1.0) < 1e-6, "offset weights must sum to 1");
  auto weight = [this](int o) {
    auto it = offset_weights.find(o);
    return it == offset_weights.end() ? 0.0 : it->second;
  };
  for (int d = 2; d <= 6; d += 2) {
    require(weight(d) <= weight(d - 2) + 1e-12 && weight(-d) <= weight(-(d - 2)) + 1e-12,
            "offset weights must not increase with distance");
  }
  require(worst_pattern_prob >= 0 && worst_pattern_prob <= 1, "worst_pattern_prob out of range");
  require(other_pattern_prob >= 0 && other_pattern_prob <= 1, "other_pattern_prob out of range");
  require(clustering >= 0 && clustering < 1, "clustering must be in [0, 1)");
  require(pair_phase <= 1, "pair_phase must be 0 or 1");
  require(threshold_jitter >= 0 && threshold_jitter < 0.5, "threshold_jitter must be in [0, 0.5)");
}

dram::RowMapping VulnerabilityProfile::mapping() const {
  switch (spec.mapping_kind) {
    case dram::MappingKind::Identity: return dram::RowMapping::identity(spec.rows);
    case dram::MappingKind::PairedWordline:
      return dram::RowMapping::paired_wordline(spec.rows, spec.pair_phase);
    case dram::MappingKind::Permuted: return dram::RowMapping::permuted(spec.rows, spec.mapping_seed);
  }
  return dram::RowMapping::identity(spec.rows);
}

dram::DramConfig VulnerabilityProfile::dram_config() const {
  auto cfg = dram::DramConfig::defaults_for(spec.dram_type);
  cfg.rows_per_bank = spec.rows;
  cfg.row_size_bytes = spec.row_size_bytes;
  return cfg;
}

VulnerabilityProfile generate_profile(const ProfileSpec& spec) {
  spec.validate();
  VulnerabilityProfile prof;
  prof.spec = spec;
  const double hmin = spec.hc_first_min;
  const double total_bits = static_cast<double>(prof.total_bits());

  if (spec.hc_star != 0) {
    prof.hc_star = spec.hc_star;
  } else if (spec.hc_first_min >= spec.sweep_cap) {
    prof.hc_star = 4 * spec.hc_first_min;
  } else {
    prof.hc_star = std::min<std::uint32_t>(4 * spec.hc_first_min, spec.sweep_cap);
  }
  if (spec.rate_exp > 0) {
    prof.rate_exp = spec.rate_exp;
  } else {
    if (prof.hc_star <= spec.hc_first_min) throw ConfigError("hc_star must exceed hc_first_min");
    const double anchor_cells = spec.anchor_rate * total_bits;
    if (anchor_cells <= 1.0) {
      throw InfeasibleError("profile '" + spec.label + "': anchor rate gives fewer than one cell");
    }
    prof.rate_exp = std::log(anchor_cells) / std::log(prof.hc_star / hmin);
  }
  const double k = prof.rate_exp;
  prof.rate_coeff = std::pow(hmin, -k);

  double n_real = 1.0;
  if (spec.hc_first_min < spec.sweep_cap) n_real = std::pow(spec.sweep_cap / hmin, k);
  if (n_real > total_bits || n_real > static_cast<double>(kMaxCells)) {
    throw InfeasibleError("profile '" + spec.label + "' needs " + std::to_string(n_real) +
                          " vulnerable cells, more than the chip can hold");
  }
  std::uint64_t n = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(n_real)));
  if (spec.max_cells > 0) n = std::min(n, spec.max_cells);

  const auto mapping = prof.mapping();
  const std::uint32_t wordlines = mapping.wordlines();
  const std::uint64_t row_bits = prof.bits_per_row();
  std::mt19937_64 rng(derive_seed(spec.seed, 1));
  std::unordered_set<std::uint64_t> used;
  used.reserve(n * 2);
  auto key = [row_bits](std::uint32_t row, std::uint32_t bit) { return row * row_bits + bit; };

  prof.cells.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    VulnerableCell cell;
    if (i == 0) {
      cell.threshold = spec.hc_first_min;
    } else {
      const double x = static_cast<double>(i) + uniform01(rng);
      cell.threshold = static_cast<std::uint32_t>(
          std::max(hmin, std::ceil(hmin * std::pow(x, 1.0 / k) - 1e-9)));
    }

    bool placed = false;
    if (i > 0 && uniform01(rng) < spec.clustering) {
      const auto& partner = prof.cells[uniform_below(rng, i)];
      const std::uint32_t word = partner.bit_index / 64 * 64;
      for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
        const auto bit = word + static_cast<std::uint32_t>(uniform_below(rng, 64));
        if (used.insert(key(partner.row, bit)).second) {
          cell.row = partner.row;
          cell.bit_index = bit;
          cell.offset = partner.offset;
          placed = true;
        }
      }
    }
    while (!placed) {
      const int o = i == 0 ? 0 : sample_offset(spec.offset_weights, rng);
      const auto victim = 1 + static_cast<std::int64_t>(uniform_below(rng, wordlines - 2));
      const std::int64_t w = victim + o;
      if (w < 0 || w >= wordlines) continue;
      const auto wl = static_cast<std::uint32_t>(w);
      const auto slot = static_cast<std::uint32_t>(uniform_below(rng, mapping.rows_on_wordline(wl)));
      const auto row = mapping.to_logical({wl, slot});
      const auto bit = static_cast<std::uint32_t>(uniform_below(rng, row_bits));
      if (!used.insert(key(row, bit)).second) continue;
      cell.row = row;
      cell.bit_index = bit;
      cell.offset = o;
      placed = true;
    }
    cell.side = side_for_offset(cell.offset);

    for (auto p : kAllPatterns) {
      const double prob = p == spec.worst_pattern ? spec.worst_pattern_prob : spec.other_pattern_prob;
      if (uniform01(rng) < prob) cell.patterns.insert(p);
    }
    if (i == 0 || cell.patterns.empty()) cell.patterns.insert(spec.worst_pattern);
    prof.cells.push_back(cell);
  }

  // No single pattern may expose every cell.
  if (prof.cells.size() >= 2) {
    for (auto p : kAllPatterns) {
      const bool covers_all = std::all_of(prof.cells.begin(), prof.cells.end(),
                                          [p](const VulnerableCell& c) { return c.patterns.contains(p); });
      if (!covers_all) continue;
      auto& last = prof.cells.back();
      last.patterns.erase(p);
      if (last.patterns.empty()) last.patterns.insert(kAllPatterns[(static_cast<int>(p) + 1) % 8]);
    }
  }
  return prof;
}

double expected_flip_rate(const VulnerabilityProfile& profile, double hc) {
  if (hc < profile.hc_first_min()) return 0.0;
  const double flips = profile.rate_coeff * std::pow(hc, profile.rate_exp);
  return std::clamp(flips / static_cast<double>(profile.total_bits()), 0.0, 1.0);
}

std::uint64_t cells_at_or_below(const VulnerabilityProfile& profile, std::uint64_t hc) {
  const auto it = std::upper_bound(
      profile.cells.begin(), profile.cells.end(), hc,
      [](std::uint64_t h, const VulnerableCell& c) { return h < c.threshold; });
  return static_cast<std::uint64_t>(it - profile.cells.begin());
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (const auto& [x, y] : points) {
    if (x <= 0 || y <= 0) continue;
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++n;
  }
  if (n < 2) throw RangeError("power-law fit needs two positive points");
  const double dn = static_cast<double>(n);
  const double vx = sxx - sx * sx / dn;
  const double vy = syy - sy * sy / dn;
  const double cxy = sxy - sx * sy / dn;
  if (vx <= 0) throw RangeError("power-law fit needs distinct x values");
  PowerLawFit fit;
  fit.k = cxy / vx;
  fit.c = std::exp((sy - fit.k * sx) / dn);
  fit.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
  return fit;
}

std::vector<ProfileSpec> bundled_profile_specs() {
  struct Row {
    const char* node;
    const char* mfr;
    dram::DramType type;
    std::uint32_t hc_first;
    const char* worst;  // nullptr when no worst-case pattern is known
  };
  static const Row kRows[] = {
      {"DDR3-old", "A", dram::DramType::DDR3, 69200, nullptr},
      {"DDR3-old", "B", dram::DramType::DDR3, 157000, nullptr},
      {"DDR3-old", "C", dram::DramType::DDR3, 155000, nullptr},
      {"DDR3-new", "A", dram::DramType::DDR3, 85000, nullptr},
      {"DDR3-new", "B", dram::DramType::DDR3, 22400, "CH0"},
      {"DDR3-new", "C", dram::DramType::DDR3, 24000, "CH0"},
      {"DDR4-old", "A", dram::DramType::DDR4, 17500, "RS1"},
      {"DDR4-old", "B", dram::DramType::DDR4, 30000, "RS1"},
      {"DDR4-old", "C", dram::DramType::DDR4, 87000, "RS0"},
      {"DDR4-new", "A", dram::DramType::DDR4, 10000, "RS0"},
      {"DDR4-new", "B", dram::DramType::DDR4, 25000, "RS0"},
      {"DDR4-new", "C", dram::DramType::DDR4, 40000, "CH1"},
      {"LPDDR4-1x", "A", dram::DramType::LPDDR4, 43200, "CH1"},
      {"LPDDR4-1x", "B", dram::DramType::LPDDR4, 16800, "CH0"},
      {"LPDDR4-1y", "A", dram::DramType::LPDDR4, 4800, "RS1"},
      {"LPDDR4-1y", "C", dram::DramType::LPDDR4, 9600, "RS1"},
  };
  std::vector<ProfileSpec> out;
  std::uint64_t index = 0;
  for (const auto& r : kRows) {
    ProfileSpec s;
    s.type_node = r.node;
    s.manufacturer = r.mfr;
    s.label = std::string(r.node) + "/Mfr" + r.mfr;
    s.dram_type = r.type;
    s.hc_first_min = r.hc_first;
    s.seed = 0x5eed0000 + ++index;
    s.on_die_ecc = r.type == dram::DramType::LPDDR4;
    s.notes.push_back("calibrated construct: rate curve anchored at 1 flip at hc_first_min and "
                      "rate 1e-6 at hc_star");
    s.notes.push_back("offset weights are approximate");
    if (r.worst) {
      s.worst_pattern = pattern_from_string(r.worst);
    } else {
      s.worst_pattern = DataPattern::CH0;
      s.notes.push_back("worst-case data pattern not measured; CH0 assumed");
    }
    const std::string node = r.node;
    if (node == "LPDDR4-1x") {
      s.offset_weights = {{-4, 0.05}, {-2, 0.15}, {0, 0.6}, {2, 0.15}, {4, 0.05}};
    } else if (node == "LPDDR4-1y") {
      s.offset_weights = {{-6, 0.04}, {-4, 0.06}, {-2, 0.15}, {0, 0.5},
                          {2, 0.15},  {4, 0.06},  {6, 0.04}};
    }
    if (node == "LPDDR4-1x" && std::string(r.mfr) == "B") {
      s.mapping_kind = dram::MappingKind::PairedWordline;
    }
    out.push_back(std::move(s));
  }
  return out;
}

ProfileSpec bundled_profile_spec(const std::string& label) {
  for (auto& s : bundled_profile_specs()) {
    if (s.label == label) return s;
  }
  throw ConfigError("no bundled profile named '" + label + "'");
}

}  // namespace rhsim::fault

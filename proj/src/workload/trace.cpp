#include "rhsim/workload/trace.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "rhsim/common.hpp"
#include "rhsim/memctrl/address_map.hpp"
#include "rhsim/workload/cache.hpp"

namespace rhsim::workload {

std::uint64_t instruction_count(const Trace& t) {
  std::uint64_t n = 0;
  for (const auto& r : t) n += std::uint64_t{r.non_mem} + 1;
  return n;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

TraceRecord parse_line(std::string_view line, std::size_t lineno) {
  auto fail = [&] { return Error("trace line " + std::to_string(lineno) + ": expected '<non_mem> R|W <hex>'"); };
  auto skip_ws = [&] {
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  };
  TraceRecord r;
  skip_ws();
  auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), r.non_mem);
  if (ec != std::errc() || p == line.data()) throw fail();
  line.remove_prefix(static_cast<std::size_t>(p - line.data()));
  skip_ws();
  if (line.empty() || (line.front() != 'R' && line.front() != 'W')) throw fail();
  r.write = line.front() == 'W';
  line.remove_prefix(1);
  skip_ws();
  if (line.size() > 2 && line[0] == '0' && (line[1] == 'x' || line[1] == 'X')) line.remove_prefix(2);
  auto [q, ec2] = std::from_chars(line.data(), line.data() + line.size(), r.address, 16);
  if (ec2 != std::errc() || q == line.data()) throw fail();
  line.remove_prefix(static_cast<std::size_t>(q - line.data()));
  skip_ws();
  if (!line.empty() && line.front() != '\r') throw fail();
  return r;
}

}  // namespace

Trace parse_trace(const std::string& text) {
  Trace t;
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++lineno;
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    t.push_back(parse_line(line, lineno));
  }
  return t;
}

std::string format_trace(const Trace& t) {
  std::string out;
  out.reserve(t.size() * 20);
  char buf[64];
  for (const auto& r : t) {
    const int n = std::snprintf(buf, sizeof buf, "%u %c 0x%llx\n", r.non_mem, r.write ? 'W' : 'R',
                                static_cast<unsigned long long>(r.address));
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

Trace read_trace(const std::string& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error("cannot open trace " + path);
  std::string text;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(n));
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw Error("cannot read trace " + path);
  return parse_trace(text);
}

void write_trace(const std::string& path, const Trace& t) {
  const std::string text = format_trace(t);
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw Error("cannot write trace " + path);
    const int n = text.empty() ? 0 : gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
    if (!text.empty() && n <= 0) throw Error("cannot write trace " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace " + path);
  out << text;
  if (!out) throw Error("cannot write trace " + path);
}

std::vector<std::uint32_t> attack_aggressors(const AttackSpec& spec, const dram::RowMapping& mapping) {
  const auto n = mapping.adjacent_rows(spec.victim, 1);
  switch (spec.kind) {
    case AttackKind::DoubleSided:
      if (n.size() != 2) {
        throw RangeError("row " + std::to_string(spec.victim) +
                         " has one physical neighbor; use a single-sided attack");
      }
      return {n[0].row, n[1].row};
    case AttackKind::SingleSided: {
      for (const auto& x : n) {
        if ((x.offset > 0) == spec.upper_side) return {x.row};
      }
      throw RangeError("row " + std::to_string(spec.victim) + " has no neighbor on the requested side");
    }
    case AttackKind::Rotating: {
      if (spec.rotating_rows == 0) throw RangeError("rotating attack needs at least one row");
      const std::int64_t w = mapping.wordline(spec.victim);
      std::vector<std::uint32_t> rows;
      for (std::uint32_t i = 0; i < spec.rotating_rows; ++i) {
        const std::int64_t wl = w - 1 + 2 * static_cast<std::int64_t>(i);
        if (wl < 0 || wl >= mapping.wordlines()) throw RangeError("rotating attack runs off the bank");
        rows.push_back(mapping.canonical_row(static_cast<std::uint32_t>(wl)));
      }
      return rows;
    }
  }
  return {};
}

Trace gen_attack_trace(const AttackSpec& spec, const dram::DramConfig& cfg, const dram::RowMapping& mapping) {
  if (spec.bank >= cfg.total_banks()) throw RangeError("bank out of range");
  const auto rows = attack_aggressors(spec, mapping);
  memctrl::AddressMap map(cfg, memctrl::AddressScheme::RowBankGroupBankColumn);
  auto rows_issued = rows;
  // A lone aggressor needs a far-away row in between to close it.
  if (rows.size() == 1) rows_issued.push_back((spec.victim + cfg.rows_per_bank / 2) % cfg.rows_per_bank);
  std::vector<std::uint64_t> addrs;
  for (auto r : rows_issued) addrs.push_back(map.encode({dram::RowAddress::from_flat_bank(cfg, spec.bank, r), 0}));
  Trace t;
  t.reserve(spec.hammers * addrs.size());
  for (std::uint64_t h = 0; h < spec.hammers; ++h) {
    for (auto a : addrs) t.push_back({0, false, a});
  }
  return t;
}

Trace gen_random_trace(const RandomTraceSpec& spec) {
  if (!(spec.mpki >= 0.0 && spec.mpki <= 1000.0)) throw RangeError("mpki must be in [0, 1000]");
  if (spec.length == 0) throw RangeError("trace length must be positive");
  if (!(spec.locality >= 0.0 && spec.locality <= 1.0)) throw RangeError("locality must be in [0, 1]");
  if (!(spec.write_fraction >= 0.0 && spec.write_fraction <= 1.0)) throw RangeError("write_fraction must be in [0, 1]");
  const std::uint64_t lines = spec.footprint_bytes / 64;
  if (lines == 0) throw RangeError("footprint must hold at least one line");

  if (!(spec.conflict_fraction >= 0.0 && spec.conflict_fraction <= 1.0)) {
    throw RangeError("conflict_fraction must be in [0, 1]");
  }
  const CacheConfig llc_cfg;
  const std::uint64_t set_stride = llc_cfg.size_bytes / llc_cfg.ways / 64;  // in lines
  const bool conflicts = spec.conflict_fraction > 0.0;
  if (conflicts && (spec.conflict_lines == 0 || std::uint64_t{spec.conflict_lines} * set_stride > lines)) {
    throw InfeasibleError("footprint too small for the conflict group");
  }

  const auto target_misses =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(spec.mpki * spec.length / 1000.0)));
  std::mt19937_64 rng(derive_seed(spec.seed, 0));
  Cache llc(llc_cfg);
  Trace t;
  std::uint64_t line = uniform_below(rng, lines);
  const std::uint64_t conflict_base =
      conflicts ? uniform_below(rng, lines - std::uint64_t{spec.conflict_lines - 1} * set_stride) : 0;
  std::uint32_t conflict_next = 0;
  std::uint64_t misses = 0;
  while (misses < target_misses) {
    if (t.size() >= spec.length) {
      throw InfeasibleError("a " + std::to_string(spec.footprint_bytes) + "-byte footprint cannot reach MPKI " +
                            std::to_string(spec.mpki) + " within " + std::to_string(spec.length) +
                            " instructions");
    }
    std::uint64_t target;
    if (conflicts && uniform01(rng) < spec.conflict_fraction) {
      target = conflict_base + std::uint64_t{conflict_next} * set_stride;
      conflict_next = (conflict_next + 1) % spec.conflict_lines;
    } else {
      if (!t.empty() && uniform01(rng) < spec.locality) {
        line = (line + 1) % lines;
      } else if (!t.empty()) {
        line = uniform_below(rng, lines);
      }
      target = line;
    }
    const bool write = uniform01(rng) < spec.write_fraction;
    if (!llc.access(target * 64, write).hit) ++misses;
    t.push_back({0, write, target * 64});
  }

  // Spread the remaining instructions over the gaps.
  const std::uint64_t spare = spec.length - t.size();
  std::mt19937_64 gap_rng(derive_seed(spec.seed, 1));
  std::vector<double> cum(t.size());
  double total = 0.0;
  for (auto& c : cum) {
    total += -std::log(1.0 - uniform01(gap_rng));
    c = total;
  }
  std::uint64_t placed = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto upto = i + 1 == t.size() ? spare : static_cast<std::uint64_t>(cum[i] / total * static_cast<double>(spare));
    t[i].non_mem = static_cast<std::uint32_t>(upto - placed);
    placed = upto;
  }
  return t;
}

}  // namespace rhsim::workload

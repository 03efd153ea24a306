#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"

namespace rhsim::workload {

/// `non_mem` non-memory instructions followed by one memory access.
struct TraceRecord {
  std::uint32_t non_mem = 0;
  bool write = false;
  std::uint64_t address = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

std::uint64_t instruction_count(const Trace& t);

/// Text format, one record per line: `<non_mem> R|W <hex address>`. Lines
/// starting with '#' are skipped. Gzip input is detected by its magic
/// bytes.
Trace read_trace(const std::string& path);
/// Gzip-compresses when `path` ends in ".gz".
void write_trace(const std::string& path, const Trace& t);
Trace parse_trace(const std::string& text);
std::string format_trace(const Trace& t);

enum class AttackKind { DoubleSided, SingleSided, Rotating };

struct AttackSpec {
  AttackKind kind = AttackKind::DoubleSided;
  std::uint32_t victim = 0;
  /// Rounds over the aggressor set.
  std::uint64_t hammers = 0;
  /// Flat bank index of the target.
  std::uint32_t bank = 0;
  /// SingleSided: use the upper neighbor instead of the lower one.
  bool upper_side = false;
  /// Rotating: number of aggressor rows.
  std::uint32_t rotating_rows = 2;
};

/// Aggressor rows of an attack in issue order for one round.
std::vector<std::uint32_t> attack_aggressors(const AttackSpec& spec, const dram::RowMapping& mapping);

/// Accesses that each force an ACT of the next aggressor row (row-
/// interleaved address layout). A single-sided attack alternates with a
/// distant row of the same bank. Meant for direct controller replay; an LLC
/// would absorb the repeats. Throws RangeError for a double-sided attack on
/// an edge row.
Trace gen_attack_trace(const AttackSpec& spec, const dram::DramConfig& cfg, const dram::RowMapping& mapping);

struct RandomTraceSpec {
  double mpki = 10.0;
  std::uint64_t footprint_bytes = 64ull << 20;
  std::uint64_t length = 1'000'000;  // instructions
  std::uint64_t seed = 1;
  /// Probability that an access goes to the line after the previous one.
  double locality = 0.5;
  double write_fraction = 0.25;
  /// Probability that an access instead walks a fixed group of lines that
  /// share one LLC set (a power-of-two stride), so it misses under LRU and
  /// keeps re-opening the same few DRAM rows.
  double conflict_fraction = 0.0;
  std::uint32_t conflict_lines = 12;
};

/// Uniform/sequential mix over the footprint whose LLC-miss MPKI, run alone
/// through a cold 16 MB 8-way LLC, matches `mpki`. Throws InfeasibleError
/// when the footprint cannot produce that many misses within `length`.
Trace gen_random_trace(const RandomTraceSpec& spec);

}  // namespace rhsim::workload

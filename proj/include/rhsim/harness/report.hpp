#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rhsim/harness/sweep.hpp"

namespace rhsim::harness {

struct ReportOptions {
  /// Also write the long table (one row per aggregate and metric).
  bool long_table = true;
  /// Stored in the metadata only, so the CSVs stay byte-identical.
  std::string timestamp;
};

/// Paths of the files written.
struct ReportFiles {
  std::string csv;
  std::string long_table;
  std::string metadata;
};

std::string sweep_csv(const SweepResult& res);
/// Aggregate rows, hc_first descending; x_index runs left to right.
std::string long_table_csv(const SweepResult& res);
nlohmann::json sweep_metadata(const SweepResult& res, const std::string& timestamp = {});

/// Writes sweep.csv, sweep_long.csv and metadata.json into `dir`, creating
/// it if needed. Throws Error on empty results or an unwritable directory.
ReportFiles emit_report(const SweepResult& res, const std::string& dir, const ReportOptions& opts = {});

}  // namespace rhsim::harness

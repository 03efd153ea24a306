#include "rhsim/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rhsim/common.hpp"

namespace rhsim::harness {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error("cannot write " + p.string());
}

void require_rows(const SweepResult& res) {
  if (res.rows.empty() || res.count(RowKind::Aggregate) == 0) throw Error("sweep result is empty");
}

}  // namespace

std::string sweep_csv(const SweepResult& res) {
  require_rows(res);
  std::ostringstream os;
  os << "kind,mechanism,hc_first,mix,status,na_reason,bandwidth_overhead,normalized_performance,"
        "weighted_speedup,overhead_min,overhead_max,performance_min,performance_max,acts,mitigation_refs,"
        "dram_cycles\n";
  for (const auto& r : res.rows) {
    os << to_string(r.kind) << ',' << mitigation::to_string(r.mechanism) << ',';
    if (r.kind != RowKind::Baseline) os << r.hc_first;
    os << ',' << r.mix << ',' << (r.supported ? "ok" : "na") << ',' << r.na_reason;
    if (r.supported) {
      os << ',' << num(r.bandwidth_overhead) << ',' << num(r.normalized_performance) << ','
         << num(r.weighted_speedup) << ',' << num(r.overhead_min) << ',' << num(r.overhead_max) << ','
         << num(r.performance_min) << ',' << num(r.performance_max) << ',' << r.acts << ',' << r.mitigation_refs
         << ',' << r.dram_cycles;
    } else {
      os << ",,,,,,,,,,";
    }
    os << '\n';
  }
  return os.str();
}

std::string long_table_csv(const SweepResult& res) {
  require_rows(res);
  std::vector<std::uint32_t> hcs = res.config.hc_sweep;
  std::sort(hcs.begin(), hcs.end(), std::greater<>());
  hcs.erase(std::unique(hcs.begin(), hcs.end()), hcs.end());

  std::ostringstream os;
  os << "mechanism,hc_first,x_index,metric,value,min,max\n";
  for (auto m : res.config.mechanisms) {
    for (std::size_t x = 0; x < hcs.size(); ++x) {
      const auto* r = res.aggregate(m, hcs[x]);
      if (!r || !r->supported) continue;
      const std::string prefix = std::string(mitigation::to_string(m)) + ',' + std::to_string(hcs[x]) + ',' +
                                 std::to_string(x) + ',';
      os << prefix << "bandwidth_overhead," << num(r->bandwidth_overhead) << ',' << num(r->overhead_min) << ','
         << num(r->overhead_max) << '\n';
      os << prefix << "normalized_performance," << num(r->normalized_performance) << ','
         << num(r->performance_min) << ',' << num(r->performance_max) << '\n';
    }
  }
  return os.str();
}

json sweep_metadata(const SweepResult& res, const std::string& timestamp) {
  json tuned = json::array();
  for (const auto& t : res.tuned) {
    json e = {{"mechanism", std::string(mitigation::to_string(t.mechanism))},
              {"hc_first", t.hc_first},
              {"supported", t.tuned.supported}};
    if (!t.tuned.supported) e["na_reason"] = t.tuned.na_reason;
    e["values"] = t.tuned.values;
    e["notes"] = t.tuned.notes;
    tuned.push_back(e);
  }
  json baselines = json::object();
  for (const auto& r : res.rows) {
    if (r.kind != RowKind::Baseline) continue;
    baselines[r.mix] = {{"weighted_speedup", r.weighted_speedup}, {"alone_ipc", res.alone_ipc.at(r.mix)}};
  }
  json markers = json::array();
  for (const auto& [node, hc] : type_node_minima()) markers.push_back({{"type_node", node}, {"hc_first", hc}});

  json j = {{"config", config_to_json(res.config)},
            {"mixes", res.mixes},
            {"baselines", baselines},
            {"tuned", tuned},
            {"plot",
             {{"x_axis", "hc_first, descending left to right"},
              {"overhead_axis", "bandwidth_overhead on an inverted log scale"},
              {"performance_axis", "normalized_performance in percent of the unprotected baseline"},
              {"error_bars", "min and max across mixes"},
              {"markers", markers}}}};
  if (!timestamp.empty()) j["timestamp"] = timestamp;
  return j;
}

ReportFiles emit_report(const SweepResult& res, const std::string& dir, const ReportOptions& opts) {
  require_rows(res);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());

  ReportFiles files;
  files.csv = (fs::path(dir) / "sweep.csv").string();
  write_file(files.csv, sweep_csv(res));
  if (opts.long_table) {
    files.long_table = (fs::path(dir) / "sweep_long.csv").string();
    write_file(files.long_table, long_table_csv(res));
  }
  files.metadata = (fs::path(dir) / "metadata.json").string();
  write_file(files.metadata, sweep_metadata(res, opts.timestamp).dump(2) + "\n");
  return files;
}

}  // namespace rhsim::harness

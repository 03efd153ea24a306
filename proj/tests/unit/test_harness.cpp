#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "rhsim/common.hpp"
#include "rhsim/harness/config.hpp"
#include "rhsim/harness/report.hpp"
#include "rhsim/harness/sweep.hpp"

using namespace rhsim;
using namespace rhsim::harness;
using mitigation::Mechanism;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.mechanisms = {Mechanism::PARA, Mechanism::Ideal};
  c.hc_sweep = {200000, 4800, 64};
  c.workload.mixes = {{"light", {"syn010", "syn022"}, {}}, {"heavy", {"syn140", "syn400"}, {}}};
  c.instructions = 4000;
  c.warmup_instructions = 2000;
  c.jobs = 1;
  return c;
}

const SweepResult& small_sweep() {
  static const SweepResult r = run_sweep(small_config());
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::string config_error(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("defaults cover the full hc_first sweep") {
  const std::vector<std::uint32_t> want = {200000, 100000, 50000, 32768, 16000, 8000, 4800,
                                           2000,   1024,   512,   256,   128,   64};
  CHECK(default_hc_sweep() == want);
  const auto c = config_from_json(json::object());
  CHECK(c.hc_sweep == want);
  CHECK(c.mechanisms.size() == 7);
  CHECK(c.workload.synthetic_mixes == 8);
  CHECK(resolve_mixes(c).size() == 8);
}

TEST_CASE("config round-trips through json") {
  auto c = small_config();
  c.mechanism_params.para_p = 0.25;
  c.security.window_acts = 64;
  c.profile = "LPDDR4-1y/MfrA";
  const json j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)) == j);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error({{"bogus", 1}}).find("bogus") != std::string::npos);
  CHECK(config_error({{"dram", {{"t_rc_ns", "fast"}}}}).find("dram.t_rc_ns") != std::string::npos);
  CHECK(config_error({{"workload", {{"mixes", {{{"name", "m"}, {"cores", 2}}}}}}})
            .find("workload.mixes[0]") != std::string::npos);
  CHECK(config_error({{"mechanism_params", {{"prohit", {{"hot", 3}}}}}}).find("mechanism_params.prohit") !=
        std::string::npos);
  CHECK(config_error({{"mechanisms", {"Magic"}}}).find("mechanisms") != std::string::npos);
  CHECK_FALSE(config_error({{"hc_first", json::array()}}).empty());
  CHECK_FALSE(config_error({{"dram", {{"type", "DDR9"}}}}).empty());
  CHECK_FALSE(config_error({{"workload", {{"mixes", {{{"name", "m"}}}}}}}).empty());
  CHECK_FALSE(config_error({{"security", {{"target", 2.0}}}}).empty());
  CHECK(config_error({{"dram", {{"type", "LPDDR4"}}}}).empty());
}

TEST_CASE("load_config reports unreadable and malformed files") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "rhsim_bad_config.json";
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("unsupported pairs become N/A aggregate rows") {
  auto c = small_config();
  c.mechanisms = {Mechanism::IncreasedRefresh, Mechanism::TWiCe, Mechanism::ProHIT};
  c.hc_sweep = {10000};
  const auto r = run_sweep(c);
  CHECK(r.count(RowKind::Mix) == 0);
  CHECK(r.count(RowKind::Aggregate) == 3);
  CHECK(r.count(RowKind::Baseline) == 2);
  CHECK(r.aggregate(Mechanism::IncreasedRefresh, 10000)->na_reason == "increased_refresh_below_32k");
  CHECK(r.aggregate(Mechanism::TWiCe, 10000)->na_reason == "twice_below_32k");
  CHECK(r.aggregate(Mechanism::ProHIT, 10000)->na_reason == "tuned_only_for_2000");
  const auto csv = sweep_csv(r);
  CHECK(csv.find("aggregate,IncreasedRefresh,10000,,na,increased_refresh_below_32k,,,") != std::string::npos);
}

TEST_CASE("2 mechanisms x 3 hc_first x 2 mixes give 12 mix rows and 6 aggregates") {
  const auto& r = small_sweep();
  CHECK(r.count(RowKind::Mix) == 12);
  CHECK(r.count(RowKind::Aggregate) == 6);
  CHECK(r.count(RowKind::Baseline) == 2);

  std::set<std::pair<Mechanism, std::uint32_t>> seen;
  for (const auto& row : r.rows) {
    if (row.kind == RowKind::Aggregate) CHECK(seen.insert({row.mechanism, row.hc_first}).second);
  }
  CHECK(seen.size() == 6);
  // Header, 2 baselines, 12 mix rows, 6 aggregates.
  CHECK(lines(sweep_csv(r)) == 21);
}

TEST_CASE("aggregates are mean, min and max of their mix rows") {
  const auto& r = small_sweep();
  for (const auto& agg : r.rows) {
    if (agg.kind != RowKind::Aggregate) continue;
    double sum = 0.0, lo = 1e9, hi = -1e9, osum = 0.0;
    int n = 0;
    for (const auto& row : r.rows) {
      if (row.kind != RowKind::Mix || row.mechanism != agg.mechanism || row.hc_first != agg.hc_first) continue;
      sum += row.normalized_performance;
      osum += row.bandwidth_overhead;
      lo = std::min(lo, row.normalized_performance);
      hi = std::max(hi, row.normalized_performance);
      ++n;
    }
    REQUIRE(n == 2);
    CHECK(agg.normalized_performance == doctest::Approx(sum / n));
    CHECK(agg.bandwidth_overhead == doctest::Approx(osum / n));
    CHECK(agg.performance_min == lo);
    CHECK(agg.performance_max == hi);
  }
}

TEST_CASE("normalized performance stays in (0, 100] up to noise") {
  for (const auto& row : small_sweep().rows) {
    CHECK(row.normalized_performance > 0.0);
    CHECK(row.normalized_performance <= 105.0);
    CHECK(row.bandwidth_overhead >= 0.0);
    CHECK(row.bandwidth_overhead < 1.0);
  }
}

TEST_CASE("PARA costs more bandwidth at hc_first 64 than at 200k") {
  const auto& r = small_sweep();
  CHECK(r.aggregate(Mechanism::PARA, 64)->bandwidth_overhead >
        r.aggregate(Mechanism::PARA, 200000)->bandwidth_overhead);
  CHECK(r.aggregate(Mechanism::PARA, 64)->normalized_performance <
        r.aggregate(Mechanism::PARA, 200000)->normalized_performance);
}

TEST_CASE("Ideal at hc_first 1024 keeps low-MPKI mixes at full speed") {
  auto c = small_config();
  c.mechanisms = {Mechanism::Ideal};
  c.hc_sweep = {1024};
  c.workload.mixes.resize(1);
  const auto r = run_sweep(c);
  const auto* a = r.aggregate(Mechanism::Ideal, 1024);
  CHECK(a->bandwidth_overhead < 0.001);
  CHECK(a->normalized_performance == doctest::Approx(100.0).epsilon(0.005));
}

TEST_CASE("sweeps are reproducible and independent of the worker count") {
  auto c = small_config();
  c.jobs = 3;
  const auto again = run_sweep(c);
  CHECK(sweep_csv(again) == sweep_csv(small_sweep()));
  CHECK(long_table_csv(again) == long_table_csv(small_sweep()));

  const auto dir = std::filesystem::temp_directory_path() / "rhsim_report_test";
  std::filesystem::remove_all(dir);
  ReportOptions o1, o2;
  o1.timestamp = "2020-01-01T00:00:00Z";
  o2.timestamp = "2021-06-01T12:00:00Z";
  const auto f1 = emit_report(small_sweep(), (dir / "a").string(), o1);
  const auto f2 = emit_report(again, (dir / "b").string(), o2);
  CHECK(read_file(f1.csv) == read_file(f2.csv));
  CHECK(read_file(f1.long_table) == read_file(f2.long_table));
  CHECK(read_file(f1.metadata) != read_file(f2.metadata));
  std::filesystem::remove_all(dir);
}

TEST_CASE("long table runs hc_first from high to low") {
  const auto t = long_table_csv(small_sweep());
  std::istringstream in(t);
  std::string line;
  std::getline(in, line);
  CHECK(line == "mechanism,hc_first,x_index,metric,value,min,max");
  std::vector<std::string> para;
  while (std::getline(in, line)) {
    if (line.rfind("PARA,", 0) == 0) para.push_back(line.substr(0, line.find(',', line.find(',', 5) + 1)));
  }
  REQUIRE(para.size() == 6);
  CHECK(para[0] == "PARA,200000,0");
  CHECK(para[2] == "PARA,4800,1");
  CHECK(para[4] == "PARA,64,2");
}

TEST_CASE("metadata echoes tuning, baselines and plot markers") {
  const auto m = sweep_metadata(small_sweep(), "t0");
  CHECK(m["timestamp"] == "t0");
  CHECK(m["tuned"].size() == 6);
  CHECK(m["tuned"][0]["values"].contains("p"));
  CHECK(m["baselines"].contains("light"));
  CHECK(m["baselines"]["heavy"]["alone_ipc"].size() == 2);
  const auto& markers = m["plot"]["markers"];
  bool lp1y = false;
  for (const auto& x : markers) {
    if (x["type_node"] == "LPDDR4-1y") lp1y = x["hc_first"] == 4800;
  }
  CHECK(lp1y);
  CHECK(m["plot"]["overhead_axis"].get<std::string>().find("inverted") != std::string::npos);
}

TEST_CASE("empty results and unwritable paths are errors") {
  SweepResult empty;
  CHECK_THROWS_AS(sweep_csv(empty), Error);
  CHECK_THROWS_AS(emit_report(empty, std::filesystem::temp_directory_path().string()), Error);
  const auto file = std::filesystem::temp_directory_path() / "rhsim_not_a_dir";
  std::ofstream(file) << "x";
  CHECK_THROWS_AS(emit_report(small_sweep(), (file / "out").string()), Error);
  std::filesystem::remove(file);
}

TEST_CASE("verify passes exact mechanisms and flags a weak PARA") {
  auto c = small_config();
  c.security.trials = 3;
  auto v = verify(c, Mechanism::Ideal, 4800);
  CHECK(v.passed);
  CHECK(v.result.failures == 0);
  CHECK(v.deterministic);

  v = verify(c, Mechanism::TWiCe, 50000);
  CHECK(v.passed);

  CHECK_THROWS_AS(verify(c, Mechanism::TWiCe, 10000), UnsupportedConfig);

  c.security.trials = 50;
  c.security.window_acts = 2000;
  c.security.target = 0.01;
  c.mechanism_params.para_p = 0.001;
  v = verify(c, Mechanism::PARA, 64);
  CHECK_FALSE(v.deterministic);
  CHECK(v.result.failures > 10);
  CHECK_FALSE(v.passed);
}

TEST_CASE("simulate_mix matches the sweep baseline") {
  const auto c = small_config();
  const auto r = simulate_mix(c, c.workload.mixes[0], Mechanism::None, 0);
  CHECK(r.cores.size() == 2);
  CHECK(r.memory.mitigation_refs == 0);
  for (const auto& row : small_sweep().rows) {
    if (row.kind == RowKind::Baseline && row.mix == "light") CHECK(row.acts == r.memory.acts);
  }
}

}  // TEST_SUITE

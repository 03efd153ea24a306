#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rhsim/characterize/characterize.hpp"
#include "rhsim/characterize/chip.hpp"
#include "rhsim/common.hpp"
#include "rhsim/fault/profile_io.hpp"
#include "rhsim/harness/config.hpp"
#include "rhsim/harness/report.hpp"
#include "rhsim/harness/sweep.hpp"
#include "rhsim/workload/mixes.hpp"
#include "rhsim/workload/trace.hpp"

namespace fs = std::filesystem;
using namespace rhsim;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSecurity = 3;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write " + p.string());
}

harness::ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? harness::ExperimentConfig{} : harness::load_config(path);
}

fault::VulnerabilityProfile profile_from_arg(const std::string& arg) {
  if (fs::exists(arg)) return fault::load_profile(arg);
  return fault::generate_profile(fault::bundled_profile_spec(arg));
}

std::vector<std::uint32_t> parse_rows(const std::string& range, std::uint32_t rows) {
  if (range.empty()) return {0, rows};
  const auto colon = range.find(':');
  if (colon == std::string::npos) throw ConfigError("row range must look like first:last");
  try {
    return {static_cast<std::uint32_t>(std::stoul(range.substr(0, colon))),
            static_cast<std::uint32_t>(std::stoul(range.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw ConfigError("bad row range '" + range + "'");
  }
}

// characterize ---------------------------------------------------------------

struct CharacterizeArgs {
  std::string profile;
  std::vector<std::uint32_t> hcs;
  std::vector<std::string> patterns;
  std::string rows;
  std::uint32_t iterations = 1;
  std::string out = "flips.csv";
  bool find_first = false;
};

int cmd_characterize(const CharacterizeArgs& a) {
  auto profile = std::make_shared<const fault::VulnerabilityProfile>(profile_from_arg(a.profile));
  characterize::SimulatedChip chip(profile);

  characterize::CharacterizationOptions opts;
  if (!a.patterns.empty()) {
    opts.patterns.clear();
    for (const auto& p : a.patterns) opts.patterns.push_back(fault::pattern_from_string(p));
  }
  opts.hc_sweep = a.hcs;
  if (opts.hc_sweep.empty()) {
    for (std::uint32_t hc = 10000; hc <= 150000; hc += 10000) opts.hc_sweep.push_back(hc);
  }
  const auto rows = parse_rows(a.rows, chip.rows());
  opts.first_row = rows[0];
  opts.last_row = rows[1];
  opts.iterations = a.iterations;
  opts.profile_label = profile->label();

  const auto db = characterize::run_characterization(chip, opts);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  db.write_csv(a.out);

  json meta = {{"profile", profile->label()},
               {"hc_sweep", opts.hc_sweep},
               {"rows", rows},
               {"iterations", opts.iterations},
               {"flips", db.size()},
               {"calibration_hc", characterize::calibration_hc(*profile)},
               {"timestamp", utc_now()}};
  json cov = json::object();
  for (auto p : opts.patterns) cov[std::string(fault::to_string(p))] = db.empty() ? 0.0 : characterize::coverage(db, p);
  meta["coverage"] = cov;
  if (a.find_first) {
    characterize::HcSearchOptions s;
    s.patterns = opts.patterns;
    const auto r = characterize::find_hc_first(chip, s);
    meta["hc_first"] = r.rowhammerable ? json(r.hc) : json(nullptr);
    std::cout << profile->label() << " hc_first "
              << (r.rowhammerable ? std::to_string(r.hc) : std::string("not reached")) << "\n";
  }
  write_json(fs::path(a.out).replace_extension(".meta.json"), meta);
  std::cout << db.size() << " flips written to " << a.out << "\n";
  return 0;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string mechanism = "None";
  std::uint32_t hc_first = 0;
  std::string mix;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  auto cfg = load_or_default(a.config);
  const auto mixes = harness::resolve_mixes(cfg);
  const harness::MixConfig* mix = &mixes.front();
  if (!a.mix.empty()) {
    mix = nullptr;
    for (const auto& m : mixes) {
      if (m.name == a.mix) mix = &m;
    }
    if (!mix) throw ConfigError("unknown mix '" + a.mix + "'");
  }
  const auto mech = mitigation::mechanism_from_string(a.mechanism);
  if (mech != mitigation::Mechanism::None) {
    auto params = cfg.mechanism_params;
    params.mechanism = mech;
    params.hc_first = a.hc_first;
    const auto t = mitigation::tune(params, cfg.dram);
    if (!t.supported) {
      std::cout << a.mechanism << " at hc_first " << a.hc_first << ": N/A (" << t.na_reason << ")\n";
      return 0;
    }
  }
  const auto r = harness::simulate_mix(cfg, *mix, mech, a.hc_first);

  std::ostringstream csv;
  csv << "mechanism,hc_first,mix,dram_cycles,acts,refs,mitigation_refs,row_hits,bandwidth_overhead,mean_ipc\n";
  double ipc = 0.0;
  for (const auto& c : r.cores) ipc += c.ipc;
  ipc /= static_cast<double>(r.cores.size());
  csv << a.mechanism << ',' << a.hc_first << ',' << mix->name << ',' << r.dram_cycles << ',' << r.memory.acts << ','
      << r.memory.refs << ',' << r.memory.mitigation_refs << ',' << r.memory.row_hits << ','
      << r.memory.bandwidth_overhead() << ',' << ipc << "\n";
  std::cout << csv.str();
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream(fs::path(a.out) / "simulate.csv") << csv.str();
    json cores = json::array();
    for (const auto& c : r.cores) {
      cores.push_back({{"instructions", c.instructions}, {"cycles", c.cycles}, {"ipc", c.ipc}, {"mpki", c.mpki}});
    }
    write_json(fs::path(a.out) / "metadata.json",
               {{"config", harness::config_to_json(cfg)}, {"mix", mix->name}, {"cores", cores}, {"timestamp", utc_now()}});
  }
  return 0;
}

// sweep ----------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string out;
  int jobs = -1;
  bool quiet = false;
};

int cmd_sweep(const SweepArgs& a) {
  auto cfg = load_or_default(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.jobs >= 0) cfg.jobs = static_cast<std::uint32_t>(a.jobs);
  harness::SweepProgress progress;
  if (!a.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\r" << done << "/" << total << " simulations" << std::flush;
      if (done == total) std::cerr << "\n";
    };
  }
  const auto res = harness::run_sweep(cfg, progress);
  harness::ReportOptions opts;
  opts.timestamp = utc_now();
  const auto files = harness::emit_report(res, cfg.output_dir, opts);
  std::cout << "wrote " << files.csv << ", " << files.long_table << ", " << files.metadata << "\n";
  return 0;
}

// verify ---------------------------------------------------------------------

struct VerifyArgs {
  std::string config;
  std::string mechanism;
  std::uint32_t hc_first = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t window_acts = 0;
  bool victim_only = false;
};

int cmd_verify(const VerifyArgs& a) {
  auto cfg = load_or_default(a.config);
  if (a.trials) cfg.security.trials = a.trials;
  if (a.seed) cfg.seed = a.seed;
  if (a.window_acts) cfg.security.window_acts = a.window_acts;
  if (a.victim_only) cfg.security.victim_only = true;
  const auto v = harness::verify(cfg, mitigation::mechanism_from_string(a.mechanism), a.hc_first);
  json j = {{"mechanism", a.mechanism},
            {"hc_first", a.hc_first},
            {"trials", v.result.trials},
            {"failures", v.result.failures},
            {"failure_rate", v.result.failure_rate},
            {"upper_conf_bound", v.result.upper_conf_bound},
            {"max_exposure", v.result.max_exposure},
            {"directives", v.result.directives},
            {"tuned", v.tuned.values},
            {"passed", v.passed}};
  std::cout << j.dump(2) << "\n";
  return v.passed ? 0 : kExitSecurity;
}

// gen-profile ----------------------------------------------------------------

struct GenProfileArgs {
  std::string label;
  std::string spec;
  bool all = false;
  bool cells = false;
  std::string out;
};

std::string file_name_for(const std::string& label) {
  std::string s = label;
  for (auto& c : s) {
    if (c == '/' || c == ' ') c = '_';
  }
  return s + ".json";
}

int cmd_gen_profile(const GenProfileArgs& a) {
  std::vector<fault::ProfileSpec> specs;
  if (a.all) {
    specs = fault::bundled_profile_specs();
  } else if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw ConfigError("cannot open " + a.spec);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(a.spec + ": " + e.what());
    }
    specs.push_back(fault::spec_from_json(j));
  } else if (!a.label.empty()) {
    specs.push_back(fault::bundled_profile_spec(a.label));
  } else {
    throw ConfigError("give --label, --spec or --all");
  }
  const bool to_dir = a.all || fs::is_directory(a.out) || a.out.empty();
  for (const auto& s : specs) {
    const auto profile = fault::generate_profile(s);
    const fs::path path = to_dir ? fs::path(a.out.empty() ? "." : a.out) / file_name_for(s.label) : fs::path(a.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fault::save_profile(path.string(), profile, a.cells);
    std::cout << path.string() << ": " << profile.cells.size() << " cells, hc_first " << profile.hc_first_min()
              << "\n";
  }
  return 0;
}

// gen-trace ------------------------------------------------------------------

struct GenTraceArgs {
  std::string benchmark;
  std::string attack;
  std::uint64_t length = 1'000'000;
  std::uint64_t seed = 1;
  std::uint32_t victim = 1000;
  std::uint64_t hammers = 10000;
  std::uint32_t bank = 0;
  std::uint32_t rotating_rows = 2;
  std::string out;
};

int cmd_gen_trace(const GenTraceArgs& a) {
  workload::Trace t;
  if (!a.benchmark.empty() == !a.attack.empty()) throw ConfigError("give exactly one of --benchmark or --attack");
  if (!a.benchmark.empty()) {
    const auto all = workload::synthetic_benchmarks(a.length, a.seed);
    t = workload::gen_random_trace(workload::find_benchmark(all, a.benchmark).trace);
  } else {
    workload::AttackSpec s;
    if (a.attack == "double") {
      s.kind = workload::AttackKind::DoubleSided;
    } else if (a.attack == "single") {
      s.kind = workload::AttackKind::SingleSided;
    } else if (a.attack == "rotating") {
      s.kind = workload::AttackKind::Rotating;
    } else {
      throw ConfigError("unknown attack '" + a.attack + "'");
    }
    s.victim = a.victim;
    s.hammers = a.hammers;
    s.bank = a.bank;
    s.rotating_rows = a.rotating_rows;
    const dram::DramConfig cfg;
    t = workload::gen_attack_trace(s, cfg, dram::RowMapping::identity(cfg.rows_per_bank));
  }
  workload::write_trace(a.out, t);
  std::cout << a.out << ": " << t.size() << " records, " << workload::instruction_count(t) << " instructions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level DRAM RowHammer simulator"};
  app.require_subcommand(1);

  CharacterizeArgs ca;
  auto* c = app.add_subcommand("characterize", "Run the characterization loop on a simulated chip");
  c->add_option("--profile", ca.profile, "Bundled profile label or profile file")->required();
  c->add_option("--hc", ca.hcs, "Hammer counts to test")->delimiter(',');
  c->add_option("--patterns", ca.patterns, "Data patterns (default: all)")->delimiter(',');
  c->add_option("--rows", ca.rows, "Victim rows as first:last");
  c->add_option("--iterations", ca.iterations, "Repetitions per test");
  c->add_option("--out", ca.out, "Flip CSV path");
  c->add_flag("--find-hc-first", ca.find_first, "Also search for the lowest flipping hammer count");

  SimulateArgs sa;
  auto* s = app.add_subcommand("simulate", "Simulate one mix under one mechanism");
  s->add_option("--config", sa.config, "Experiment config (JSON)");
  s->add_option("--mechanism", sa.mechanism, "Mitigation mechanism");
  s->add_option("--hc-first", sa.hc_first, "hc_first the mechanism protects against");
  s->add_option("--mix", sa.mix, "Mix name (default: the first)");
  s->add_option("--out", sa.out, "Output directory");

  SweepArgs wa;
  auto* w = app.add_subcommand("sweep", "Run every mechanism over the hc_first sweep");
  w->add_option("--config", wa.config, "Experiment config (JSON)");
  w->add_option("--out", wa.out, "Output directory (overrides the config)");
  w->add_option("--jobs", wa.jobs, "Concurrent simulations (0: one per hardware thread)");
  w->add_flag("--quiet", wa.quiet, "No progress output");

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "Attack a mechanism and count RowHammer failures");
  v->add_option("--config", va.config, "Experiment config (JSON)");
  v->add_option("--mechanism", va.mechanism, "Mitigation mechanism")->required();
  v->add_option("--hc-first", va.hc_first, "hc_first")->required();
  v->add_option("--trials", va.trials, "Attack trials (overrides the config)");
  v->add_option("--seed", va.seed, "Seed (overrides the config)");
  v->add_option("--window-acts", va.window_acts, "Activations per trial instead of a refresh window");
  v->add_flag("--victim-only", va.victim_only, "Judge only the attacked victim row");

  GenProfileArgs ga;
  auto* g = app.add_subcommand("gen-profile", "Generate vulnerability profiles");
  g->add_option("--label", ga.label, "Bundled profile label");
  g->add_option("--spec", ga.spec, "Profile spec (JSON)");
  g->add_flag("--all", ga.all, "Every bundled profile");
  g->add_flag("--cells", ga.cells, "Store the generated cells too");
  g->add_option("--out", ga.out, "Output file or directory");

  GenTraceArgs ta;
  auto* t = app.add_subcommand("gen-trace", "Write a synthetic or attack trace");
  t->add_option("--benchmark", ta.benchmark, "Synthetic benchmark name");
  t->add_option("--attack", ta.attack, "double, single or rotating");
  t->add_option("--length", ta.length, "Instructions (synthetic)");
  t->add_option("--seed", ta.seed, "Seed (synthetic)");
  t->add_option("--victim", ta.victim, "Victim row (attack)");
  t->add_option("--hammers", ta.hammers, "Rounds over the aggressors (attack)");
  t->add_option("--bank", ta.bank, "Bank (attack)");
  t->add_option("--rotating-rows", ta.rotating_rows, "Aggressor count (rotating attack)");
  t->add_option("--out", ta.out, "Trace path; .gz compresses")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*c) return cmd_characterize(ca);
    if (*s) return cmd_simulate(sa);
    if (*w) return cmd_sweep(wa);
    if (*v) return cmd_verify(va);
    if (*g) return cmd_gen_profile(ga);
    if (*t) return cmd_gen_trace(ta);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedConfig& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

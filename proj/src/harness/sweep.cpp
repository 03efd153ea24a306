#include "rhsim/harness/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "rhsim/common.hpp"
#include "rhsim/fault/profile.hpp"
#include "rhsim/workload/mixes.hpp"
#include "rhsim/workload/trace.hpp"

namespace rhsim::harness {

using mitigation::Mechanism;

std::string_view to_string(RowKind k) {
  switch (k) {
    case RowKind::Baseline: return "baseline";
    case RowKind::Mix: return "mix";
    case RowKind::Aggregate: return "aggregate";
  }
  return "?";
}

const SweepRow* SweepResult::aggregate(Mechanism m, std::uint32_t hc_first) const {
  for (const auto& r : rows) {
    if (r.kind == RowKind::Aggregate && r.mechanism == m && r.hc_first == hc_first) return &r;
  }
  return nullptr;
}

std::size_t SweepResult::count(RowKind k) const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const auto& r) { return r.kind == k; }));
}

std::map<std::string, std::uint32_t> type_node_minima() {
  std::map<std::string, std::uint32_t> out;
  for (const auto& s : fault::bundled_profile_specs()) {
    auto [it, fresh] = out.emplace(s.type_node, s.hc_first_min);
    if (!fresh) it->second = std::min(it->second, s.hc_first_min);
  }
  return out;
}

std::vector<MixConfig> resolve_mixes(const ExperimentConfig& config) {
  if (!config.workload.mixes.empty()) return config.workload.mixes;
  std::vector<MixConfig> out;
  for (auto& m : workload::synthetic_mixes(config.workload.synthetic_mixes, config.workload.cores)) {
    out.push_back({m.name, m.benchmarks, {}});
  }
  return out;
}

namespace {

bool probabilistic(Mechanism m) {
  return m == Mechanism::PARA || m == Mechanism::ProHIT || m == Mechanism::MRLoc;
}

std::uint64_t mechanism_seed(const ExperimentConfig& c, Mechanism m, std::uint32_t hc, std::size_t mix) {
  std::uint64_t s = derive_seed(c.mechanism_params.seed ^ c.seed, static_cast<std::uint64_t>(m));
  s = derive_seed(s, hc);
  return derive_seed(s, mix);
}

/// Traces of every core of every mix, loaded or generated once.
class TraceSet {
 public:
  explicit TraceSet(const ExperimentConfig& c) {
    const std::uint64_t length =
        c.workload.trace_length ? c.workload.trace_length : c.instructions + c.warmup_instructions;
    std::vector<workload::BenchmarkSpec> catalog;
    for (const auto& mix : resolve_mixes(c)) {
      std::vector<workload::TracePtr> cores;
      for (const auto& path : mix.traces) cores.push_back(load(path, [&] { return workload::read_trace(path); }));
      for (const auto& name : mix.benchmarks) {
        if (catalog.empty()) catalog = workload::synthetic_benchmarks(length, c.seed);
        const auto& b = workload::find_benchmark(catalog, name);
        cores.push_back(load(name, [&] { return workload::gen_random_trace(b.trace); }));
      }
      keys_.push_back(mix.traces.empty() ? mix.benchmarks : mix.traces);
      mixes_.push_back(std::move(cores));
    }
  }

  const std::vector<workload::TracePtr>& mix(std::size_t i) const { return mixes_[i]; }
  const std::vector<std::string>& keys(std::size_t i) const { return keys_[i]; }

 private:
  template <class F>
  workload::TracePtr load(const std::string& key, F&& make) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto t = std::make_shared<const workload::Trace>(make());
    cache_.emplace(key, t);
    return t;
  }

  std::map<std::string, workload::TracePtr> cache_;
  std::vector<std::vector<workload::TracePtr>> mixes_;
  std::vector<std::vector<std::string>> keys_;
};

workload::SystemConfig system_config(const ExperimentConfig& c, Mechanism m, std::uint32_t hc, std::uint64_t seed) {
  workload::SystemConfig s;
  s.dram = c.dram;
  s.controller = c.controller;
  s.mechanism = c.mechanism_params;
  s.mechanism.mechanism = m;
  s.mechanism.hc_first = hc;
  s.mechanism.seed = seed;
  s.instructions = c.instructions;
  s.warmup_instructions = c.warmup_instructions;
  return s;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
/// is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t n, std::uint32_t jobs, F&& fn) {
  std::size_t workers = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

workload::SimResult simulate_mix(const ExperimentConfig& config, const MixConfig& mix, Mechanism m,
                                 std::uint32_t hc_first) {
  ExperimentConfig c = config;
  c.workload.mixes = {mix};
  c.validate();
  TraceSet traces(c);
  return workload::simulate(traces.mix(0), system_config(c, m, hc_first, mechanism_seed(c, m, hc_first, 0)));
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepProgress& progress) {
  config.validate();
  SweepResult res;
  res.config = config;
  const auto mixes = resolve_mixes(config);
  for (const auto& m : mixes) res.mixes.push_back(m.name);
  const TraceSet traces(config);

  struct Pair {
    Mechanism mechanism;
    std::uint32_t hc;
    mitigation::TunedMechanism tuned;
  };
  std::vector<Pair> pairs;
  for (auto m : config.mechanisms) {
    for (auto hc : config.hc_sweep) {
      auto params = config.mechanism_params;
      params.mechanism = m;
      params.hc_first = hc;
      pairs.push_back({m, hc, mitigation::tune(params, config.dram)});
      res.tuned.push_back({m, hc, pairs.back().tuned});
    }
  }

  // Jobs: alone runs (one per distinct trace and region), then baselines,
  // then every supported (pair, mix).
  struct Job {
    enum { Alone, Run } type;
    std::size_t mix;
    std::size_t core = 0;
    std::size_t pair = 0;
    bool baseline = false;
  };
  std::vector<Job> jobs;
  std::map<std::pair<std::string, std::size_t>, std::size_t> alone_index;
  std::vector<std::vector<std::size_t>> alone_of(mixes.size());
  for (std::size_t i = 0; i < mixes.size(); ++i) {
    const auto& keys = traces.keys(i);
    for (std::size_t core = 0; core < keys.size(); ++core) {
      auto [it, fresh] = alone_index.emplace(std::pair{keys[core], core}, jobs.size());
      if (fresh) jobs.push_back({Job::Alone, i, core});
      alone_of[i].push_back(it->second);
    }
  }
  std::vector<std::size_t> baseline_job(mixes.size());
  for (std::size_t i = 0; i < mixes.size(); ++i) {
    baseline_job[i] = jobs.size();
    jobs.push_back({Job::Run, i, 0, 0, true});
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> run_job;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (!pairs[p].tuned.supported) continue;
    for (std::size_t i = 0; i < mixes.size(); ++i) {
      run_job[{p, i}] = jobs.size();
      jobs.push_back({Job::Run, i, 0, p, false});
    }
  }

  std::vector<workload::SimResult> out(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;
  parallel_for(jobs.size(), config.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    if (job.type == Job::Alone) {
      auto cfg = system_config(config, Mechanism::None, 0, mechanism_seed(config, Mechanism::None, 0, job.mix));
      out[j] = workload::simulate({traces.mix(job.mix)[job.core]}, cfg, {static_cast<std::uint32_t>(job.core)});
    } else {
      const Mechanism m = job.baseline ? Mechanism::None : pairs[job.pair].mechanism;
      const std::uint32_t hc = job.baseline ? 0 : pairs[job.pair].hc;
      out[j] = workload::simulate(traces.mix(job.mix), system_config(config, m, hc, mechanism_seed(config, m, hc, job.mix)));
    }
    const std::size_t n = ++done;
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(n, jobs.size());
    }
  });

  auto ipcs = [](const workload::SimResult& r) {
    std::vector<double> v;
    for (const auto& c : r.cores) v.push_back(c.ipc);
    return v;
  };
  std::vector<double> baseline_ws(mixes.size());
  for (std::size_t i = 0; i < mixes.size(); ++i) {
    auto& alone = res.alone_ipc[mixes[i].name];
    for (auto j : alone_of[i]) alone.push_back(out[j].cores.at(0).ipc);
    const auto& r = out[baseline_job[i]];
    baseline_ws[i] = workload::weighted_speedup(ipcs(r), alone);
    SweepRow row;
    row.kind = RowKind::Baseline;
    row.mix = mixes[i].name;
    row.bandwidth_overhead = r.memory.bandwidth_overhead();
    row.normalized_performance = 100.0;
    row.weighted_speedup = baseline_ws[i];
    row.overhead_min = row.overhead_max = row.bandwidth_overhead;
    row.performance_min = row.performance_max = 100.0;
    row.acts = r.memory.acts;
    row.mitigation_refs = r.memory.mitigation_refs;
    row.dram_cycles = r.dram_cycles;
    res.rows.push_back(row);
  }

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    SweepRow agg;
    agg.kind = RowKind::Aggregate;
    agg.mechanism = pairs[p].mechanism;
    agg.hc_first = pairs[p].hc;
    if (!pairs[p].tuned.supported) {
      agg.supported = false;
      agg.na_reason = pairs[p].tuned.na_reason;
      res.rows.push_back(agg);
      continue;
    }
    agg.overhead_min = agg.performance_min = INFINITY;
    agg.overhead_max = agg.performance_max = -INFINITY;
    for (std::size_t i = 0; i < mixes.size(); ++i) {
      const auto& r = out[run_job.at({p, i})];
      SweepRow row;
      row.kind = RowKind::Mix;
      row.mechanism = agg.mechanism;
      row.hc_first = agg.hc_first;
      row.mix = mixes[i].name;
      row.bandwidth_overhead = r.memory.bandwidth_overhead();
      row.weighted_speedup = workload::weighted_speedup(ipcs(r), res.alone_ipc[mixes[i].name]);
      row.normalized_performance = workload::normalized_performance(row.weighted_speedup, baseline_ws[i]);
      row.overhead_min = row.overhead_max = row.bandwidth_overhead;
      row.performance_min = row.performance_max = row.normalized_performance;
      row.acts = r.memory.acts;
      row.mitigation_refs = r.memory.mitigation_refs;
      row.dram_cycles = r.dram_cycles;
      res.rows.push_back(row);

      agg.bandwidth_overhead += row.bandwidth_overhead;
      agg.normalized_performance += row.normalized_performance;
      agg.weighted_speedup += row.weighted_speedup;
      agg.overhead_min = std::min(agg.overhead_min, row.bandwidth_overhead);
      agg.overhead_max = std::max(agg.overhead_max, row.bandwidth_overhead);
      agg.performance_min = std::min(agg.performance_min, row.normalized_performance);
      agg.performance_max = std::max(agg.performance_max, row.normalized_performance);
      agg.acts += row.acts;
      agg.mitigation_refs += row.mitigation_refs;
      agg.dram_cycles += row.dram_cycles;
    }
    const double n = static_cast<double>(mixes.size());
    agg.bandwidth_overhead /= n;
    agg.normalized_performance /= n;
    agg.weighted_speedup /= n;
    res.rows.push_back(agg);
  }
  return res;
}

VerifyOutcome verify(const ExperimentConfig& config, Mechanism m, std::uint32_t hc_first) {
  VerifyOutcome v;
  v.params = config.mechanism_params;
  v.params.mechanism = m;
  v.params.hc_first = hc_first;
  v.tuned = mitigation::tune(v.params, config.dram);
  if (!v.tuned.supported) {
    throw UnsupportedConfig(std::string(mitigation::to_string(m)) + " at hc_first " + std::to_string(hc_first) +
                            ": " + v.tuned.na_reason);
  }
  mitigation::AttackOptions opts;
  opts.window_acts = config.security.window_acts;
  opts.victim_only = config.security.victim_only;
  v.result = mitigation::verify_security(v.params, config.dram, config.security.trials, config.seed, opts);
  v.deterministic = !probabilistic(m);
  if (v.deterministic) {
    v.passed = v.result.failures == 0;
  } else {
    // Allow three standard deviations of binomial noise around the target.
    const double n = static_cast<double>(v.result.trials);
    const double t = config.security.target;
    v.passed = static_cast<double>(v.result.failures) <= n * t + 3.0 * std::sqrt(n * t * (1.0 - t));
  }
  return v;
}

}  // namespace rhsim::harness

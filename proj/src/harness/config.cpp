#include "rhsim/harness/config.hpp"

#include <fstream>
#include <set>

#include "rhsim/common.hpp"
#include "rhsim/fault/profile_io.hpp"

namespace rhsim::harness {

using nlohmann::json;

std::vector<std::uint32_t> default_hc_sweep() {
  return {200000, 100000, 50000, 32768, 16000, 8000, 4800, 2000, 1024, 512, 256, 128, 64};
}

namespace {

/// Walks one JSON object, rejecting keys it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> keys) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
    for (const auto& [k, v] : j.items()) {
      if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + where());
    }
  }

  template <class T>
  void get(const char* key, T& out) const {
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) const {
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  const json* child(const char* key) const {
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string where(const std::string& key = {}) const {
    const std::string p = key.empty() ? path_ : (path_.empty() ? key : path_ + "." + key);
    return p.empty() ? "config" : "'" + p + "'";
  }

 private:
  const json& j_;
  std::string path_;
};

template <class F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

dram::DramConfig dram_from_json(const json& j) {
  Section s(j, "dram",
            {"type", "t_rc_ns", "t_ras_ns", "t_rp_ns", "t_rcd_ns", "t_cl_ns", "t_bl_cycles", "t_refw_ms", "t_refi_us",
             "ref_busy_trc", "channels", "ranks", "bank_groups", "banks_per_group", "rows_per_bank", "row_size_bytes",
             "clock_freq_mhz"});
  dram::DramConfig c;
  if (s.child("type")) {
    std::string name;
    s.get("type", name);
    c = wrap(s.where("type"), [&] { return dram::DramConfig::defaults_for(dram::dram_type_from_string(name)); });
  }
  s.get("t_rc_ns", c.t_rc_ns);
  s.get("t_ras_ns", c.t_ras_ns);
  s.get("t_rp_ns", c.t_rp_ns);
  s.get("t_rcd_ns", c.t_rcd_ns);
  s.get("t_cl_ns", c.t_cl_ns);
  s.get("t_bl_cycles", c.t_bl_cycles);
  s.get("t_refw_ms", c.t_refw_ms);
  s.get("t_refi_us", c.t_refi_us);
  s.get("ref_busy_trc", c.ref_busy_trc);
  s.get("channels", c.channels);
  s.get("ranks", c.ranks);
  s.get("bank_groups", c.bank_groups);
  s.get("banks_per_group", c.banks_per_group);
  s.get("rows_per_bank", c.rows_per_bank);
  s.get("row_size_bytes", c.row_size_bytes);
  s.get("clock_freq_mhz", c.clock_freq_mhz);
  return c;
}

json dram_to_json(const dram::DramConfig& c) {
  return {{"type", std::string(dram::to_string(c.dram_type))},
          {"t_rc_ns", c.t_rc_ns},
          {"t_ras_ns", c.t_ras_ns},
          {"t_rp_ns", c.t_rp_ns},
          {"t_rcd_ns", c.t_rcd_ns},
          {"t_cl_ns", c.t_cl_ns},
          {"t_bl_cycles", c.t_bl_cycles},
          {"t_refw_ms", c.t_refw_ms},
          {"t_refi_us", c.t_refi_us},
          {"ref_busy_trc", c.ref_busy_trc},
          {"channels", c.channels},
          {"ranks", c.ranks},
          {"bank_groups", c.bank_groups},
          {"banks_per_group", c.banks_per_group},
          {"rows_per_bank", c.rows_per_bank},
          {"row_size_bytes", c.row_size_bytes},
          {"clock_freq_mhz", c.clock_freq_mhz}};
}

memctrl::ControllerParams controller_from_json(const json& j) {
  Section s(j, "controller",
            {"read_queue_size", "write_queue_size", "write_high", "write_low", "mitigation_priority",
             "refresh_enabled", "address_scheme"});
  memctrl::ControllerParams p;
  s.get("read_queue_size", p.read_queue_size);
  s.get("write_queue_size", p.write_queue_size);
  s.get("write_high", p.write_high);
  s.get("write_low", p.write_low);
  s.get("mitigation_priority", p.mitigation_priority);
  s.get("refresh_enabled", p.refresh_enabled);
  std::string scheme;
  s.get("address_scheme", scheme);
  if (!scheme.empty()) {
    p.scheme = wrap(s.where("address_scheme"), [&] { return memctrl::address_scheme_from_string(scheme); });
  }
  return p;
}

json controller_to_json(const memctrl::ControllerParams& p) {
  return {{"read_queue_size", p.read_queue_size},
          {"write_queue_size", p.write_queue_size},
          {"write_high", p.write_high},
          {"write_low", p.write_low},
          {"mitigation_priority", p.mitigation_priority},
          {"refresh_enabled", p.refresh_enabled},
          {"address_scheme", std::string(memctrl::to_string(p.scheme))}};
}

mitigation::MechanismParams mechanism_params_from_json(const json& j) {
  Section s(j, "mechanism_params", {"para_ber_per_hour", "para_p", "prohit", "mrloc", "seed"});
  mitigation::MechanismParams m;
  s.get("para_ber_per_hour", m.para_ber_per_hour);
  s.get("para_p", m.para_p);
  s.get("seed", m.seed);
  if (const auto* p = s.child("prohit")) {
    Section ps(*p, "mechanism_params.prohit", {"hot_capacity", "cold_capacity", "p_insert", "p_evict", "p_promote"});
    ps.get("hot_capacity", m.prohit.hot_capacity);
    ps.get("cold_capacity", m.prohit.cold_capacity);
    ps.get("p_insert", m.prohit.p_insert);
    ps.get("p_evict", m.prohit.p_evict);
    ps.get("p_promote", m.prohit.p_promote);
  }
  if (const auto* p = s.child("mrloc")) {
    Section ms(*p, "mechanism_params.mrloc", {"queue_capacity", "p_max", "p_min", "horizon_trc"});
    ms.get("queue_capacity", m.mrloc.queue_capacity);
    ms.get("p_max", m.mrloc.p_max);
    ms.get("p_min", m.mrloc.p_min);
    ms.get("horizon_trc", m.mrloc.horizon_trc);
  }
  return m;
}

json mechanism_params_to_json(const mitigation::MechanismParams& m) {
  json j = {{"para_ber_per_hour", m.para_ber_per_hour},
            {"para_p", m.para_p ? json(*m.para_p) : json(nullptr)},
            {"seed", m.seed},
            {"prohit",
             {{"hot_capacity", m.prohit.hot_capacity},
              {"cold_capacity", m.prohit.cold_capacity},
              {"p_insert", m.prohit.p_insert},
              {"p_evict", m.prohit.p_evict},
              {"p_promote", m.prohit.p_promote}}},
            {"mrloc",
             {{"queue_capacity", m.mrloc.queue_capacity},
              {"p_max", m.mrloc.p_max},
              {"p_min", m.mrloc.p_min},
              {"horizon_trc", m.mrloc.horizon_trc}}}};
  return j;
}

WorkloadConfig workload_from_json(const json& j) {
  Section s(j, "workload", {"synthetic_mixes", "cores", "trace_length", "mixes"});
  WorkloadConfig w;
  s.get("synthetic_mixes", w.synthetic_mixes);
  s.get("cores", w.cores);
  s.get("trace_length", w.trace_length);
  if (const auto* mixes = s.child("mixes")) {
    if (!mixes->is_array()) throw ConfigError("'workload.mixes' must be an array");
    for (std::size_t i = 0; i < mixes->size(); ++i) {
      Section ms((*mixes)[i], "workload.mixes[" + std::to_string(i) + "]", {"name", "benchmarks", "traces"});
      MixConfig m;
      ms.get("name", m.name);
      ms.get("benchmarks", m.benchmarks);
      ms.get("traces", m.traces);
      if (m.name.empty()) m.name = "mix" + std::to_string(i);
      w.mixes.push_back(std::move(m));
    }
  }
  return w;
}

json workload_to_json(const WorkloadConfig& w) {
  json mixes = json::array();
  for (const auto& m : w.mixes) {
    json e = {{"name", m.name}};
    if (!m.benchmarks.empty()) e["benchmarks"] = m.benchmarks;
    if (!m.traces.empty()) e["traces"] = m.traces;
    mixes.push_back(e);
  }
  return {{"synthetic_mixes", w.synthetic_mixes}, {"cores", w.cores}, {"trace_length", w.trace_length},
          {"mixes", mixes}};
}

}  // namespace

void ExperimentConfig::validate() const {
  dram.validate();
  controller.validate();
  if (mechanisms.empty()) throw ConfigError("no mechanisms given");
  if (hc_sweep.empty()) throw ConfigError("hc_first sweep is empty");
  for (auto hc : hc_sweep) {
    if (hc < 2) throw ConfigError("hc_first values must be at least 2");
  }
  if (instructions == 0) throw ConfigError("instructions must be positive");
  if (workload.mixes.empty() && (workload.synthetic_mixes == 0 || workload.cores == 0)) {
    throw ConfigError("workload needs at least one mix and one core");
  }
  for (const auto& m : workload.mixes) {
    if (m.benchmarks.empty() == m.traces.empty()) {
      throw ConfigError("mix '" + m.name + "' needs either benchmarks or traces");
    }
  }
  if (security.trials == 0) throw ConfigError("security.trials must be positive");
  if (!(security.target > 0.0 && security.target < 1.0)) throw ConfigError("security.target must be in (0, 1)");
  if (mechanism_params.para_p && !(*mechanism_params.para_p > 0.0 && *mechanism_params.para_p <= 1.0)) {
    throw ConfigError("para_p must be in (0, 1]");
  }
}

ExperimentConfig config_from_json(const json& j) {
  Section s(j, "",
            {"dram", "controller", "mechanisms", "hc_first", "mechanism_params", "workload", "instructions",
             "warmup_instructions", "seed", "jobs", "output_dir", "profile", "profile_spec", "security"});
  ExperimentConfig c;
  if (const auto* d = s.child("dram")) c.dram = dram_from_json(*d);
  if (const auto* d = s.child("controller")) c.controller = controller_from_json(*d);
  if (s.child("mechanisms")) {
    std::vector<std::string> names;
    s.get("mechanisms", names);
    c.mechanisms.clear();
    for (const auto& n : names) {
      c.mechanisms.push_back(wrap(s.where("mechanisms"), [&] { return mitigation::mechanism_from_string(n); }));
    }
  }
  s.get("hc_first", c.hc_sweep);
  if (const auto* d = s.child("mechanism_params")) c.mechanism_params = mechanism_params_from_json(*d);
  if (const auto* d = s.child("workload")) c.workload = workload_from_json(*d);
  s.get("instructions", c.instructions);
  s.get("warmup_instructions", c.warmup_instructions);
  s.get("seed", c.seed);
  s.get("jobs", c.jobs);
  s.get("output_dir", c.output_dir);
  s.get("profile", c.profile);
  if (const auto* p = s.child("profile_spec")) c.profile_spec = fault::spec_from_json(*p);
  if (const auto* d = s.child("security")) {
    Section ss(*d, "security", {"trials", "window_acts", "victim_only", "target"});
    ss.get("trials", c.security.trials);
    ss.get("window_acts", c.security.window_acts);
    ss.get("victim_only", c.security.victim_only);
    ss.get("target", c.security.target);
  }
  wrap("config", [&] {
    c.validate();
    return 0;
  });
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json mechs = json::array();
  for (auto m : c.mechanisms) mechs.push_back(std::string(mitigation::to_string(m)));
  json j = {{"dram", dram_to_json(c.dram)},
            {"controller", controller_to_json(c.controller)},
            {"mechanisms", mechs},
            {"hc_first", c.hc_sweep},
            {"mechanism_params", mechanism_params_to_json(c.mechanism_params)},
            {"workload", workload_to_json(c.workload)},
            {"instructions", c.instructions},
            {"warmup_instructions", c.warmup_instructions},
            {"seed", c.seed},
            {"jobs", c.jobs},
            {"output_dir", c.output_dir},
            {"security",
             {{"trials", c.security.trials},
              {"window_acts", c.security.window_acts ? json(*c.security.window_acts) : json(nullptr)},
              {"victim_only", c.security.victim_only},
              {"target", c.security.target}}}};
  if (c.profile) j["profile"] = *c.profile;
  if (c.profile_spec) j["profile_spec"] = fault::spec_to_json(*c.profile_spec);
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

fault::VulnerabilityProfile resolve_profile(const ExperimentConfig& c) {
  if (c.profile_spec) return fault::generate_profile(*c.profile_spec);
  if (!c.profile) throw ConfigError("no profile given");
  std::ifstream probe(*c.profile);
  if (probe) return fault::load_profile(*c.profile);
  return fault::generate_profile(fault::bundled_profile_spec(*c.profile));
}

}  // namespace rhsim::harness

#include "rhsim/fault/profile_io.hpp"

#include <fstream>
#include <set>

#include "rhsim/common.hpp"

namespace rhsim::fault {

using nlohmann::json;

namespace {

template <class T>
void read_field(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("profile field '") + key + "': " + e.what());
  }
}

const std::set<std::string> kSpecKeys = {
    "label",        "type_node",          "manufacturer",       "dram_type",
    "hc_first_min", "rate_exp",           "anchor_rate",        "hc_star",
    "sweep_cap",    "rows",               "row_size_bytes",     "offset_weights",
    "worst_pattern", "worst_pattern_prob", "other_pattern_prob", "clustering",
    "max_cells",    "mapping",            "on_die_ecc",         "single_sided_onset",
    "threshold_jitter", "seed",           "temperature_c",      "notes"};

}  // namespace

json spec_to_json(const ProfileSpec& s) {
  json weights = json::object();
  for (const auto& [o, w] : s.offset_weights) weights[std::to_string(o)] = w;
  json mapping = {{"kind", std::string(dram::to_string(s.mapping_kind))}};
  if (s.mapping_kind == dram::MappingKind::PairedWordline) mapping["phase"] = s.pair_phase;
  if (s.mapping_kind == dram::MappingKind::Permuted) mapping["seed"] = s.mapping_seed;
  return json{{"label", s.label},
              {"type_node", s.type_node},
              {"manufacturer", s.manufacturer},
              {"dram_type", std::string(dram::to_string(s.dram_type))},
              {"hc_first_min", s.hc_first_min},
              {"rate_exp", s.rate_exp},
              {"anchor_rate", s.anchor_rate},
              {"hc_star", s.hc_star},
              {"sweep_cap", s.sweep_cap},
              {"rows", s.rows},
              {"row_size_bytes", s.row_size_bytes},
              {"offset_weights", weights},
              {"worst_pattern", std::string(to_string(s.worst_pattern))},
              {"worst_pattern_prob", s.worst_pattern_prob},
              {"other_pattern_prob", s.other_pattern_prob},
              {"clustering", s.clustering},
              {"max_cells", s.max_cells},
              {"mapping", mapping},
              {"on_die_ecc", s.on_die_ecc},
              {"single_sided_onset", s.single_sided_onset},
              {"threshold_jitter", s.threshold_jitter},
              {"seed", s.seed},
              {"temperature_c", s.temperature_c},
              {"notes", s.notes}};
}

ProfileSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("profile spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kSpecKeys.count(key)) throw ConfigError("unknown profile field '" + key + "'");
  }
  ProfileSpec s;
  read_field(j, "label", s.label);
  read_field(j, "type_node", s.type_node);
  read_field(j, "manufacturer", s.manufacturer);
  if (j.contains("dram_type")) {
    std::string t;
    read_field(j, "dram_type", t);
    s.dram_type = dram::dram_type_from_string(t);
    s.on_die_ecc = s.dram_type == dram::DramType::LPDDR4;
  }
  read_field(j, "hc_first_min", s.hc_first_min);
  read_field(j, "rate_exp", s.rate_exp);
  read_field(j, "anchor_rate", s.anchor_rate);
  read_field(j, "hc_star", s.hc_star);
  read_field(j, "sweep_cap", s.sweep_cap);
  read_field(j, "rows", s.rows);
  read_field(j, "row_size_bytes", s.row_size_bytes);
  if (j.contains("offset_weights")) {
    const auto& w = j.at("offset_weights");
    if (!w.is_object()) throw ConfigError("offset_weights must be an object");
    s.offset_weights.clear();
    for (const auto& [key, value] : w.items()) {
      int o = 0;
      try {
        o = std::stoi(key);
      } catch (const std::exception&) {
        throw ConfigError("offset_weights key '" + key + "' is not an integer");
      }
      if (!value.is_number()) throw ConfigError("offset weight must be a number");
      s.offset_weights[o] = value.get<double>();
    }
  }
  if (j.contains("worst_pattern")) {
    std::string p;
    read_field(j, "worst_pattern", p);
    s.worst_pattern = pattern_from_string(p);
  }
  read_field(j, "worst_pattern_prob", s.worst_pattern_prob);
  read_field(j, "other_pattern_prob", s.other_pattern_prob);
  read_field(j, "clustering", s.clustering);
  read_field(j, "max_cells", s.max_cells);
  if (j.contains("mapping")) {
    const auto& m = j.at("mapping");
    if (!m.is_object() || !m.contains("kind")) throw ConfigError("mapping needs a kind");
    std::string kind;
    read_field(m, "kind", kind);
    s.mapping_kind = dram::mapping_kind_from_string(kind);
    read_field(m, "phase", s.pair_phase);
    read_field(m, "seed", s.mapping_seed);
  }
  read_field(j, "on_die_ecc", s.on_die_ecc);
  read_field(j, "single_sided_onset", s.single_sided_onset);
  read_field(j, "threshold_jitter", s.threshold_jitter);
  read_field(j, "seed", s.seed);
  read_field(j, "temperature_c", s.temperature_c);
  read_field(j, "notes", s.notes);
  s.validate();
  return s;
}

json profile_to_json(const VulnerabilityProfile& p, bool include_cells) {
  json j = {{"schema_version", kProfileSchemaVersion},
            {"spec", spec_to_json(p.spec)},
            {"rate_coeff", p.rate_coeff},
            {"rate_exp", p.rate_exp},
            {"hc_star", p.hc_star},
            {"cell_count", p.cells.size()}};
  if (include_cells) {
    json cells = json::array();
    for (const auto& c : p.cells) {
      json pats = json::array();
      for (auto dp : c.patterns.members()) pats.push_back(std::string(to_string(dp)));
      cells.push_back({{"row", c.row},
                       {"bit", c.bit_index},
                       {"threshold", c.threshold},
                       {"offset", c.offset},
                       {"side", std::string(to_string(c.side))},
                       {"patterns", pats}});
    }
    j["cells"] = std::move(cells);
  }
  return j;
}

VulnerabilityProfile profile_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("profile must be a JSON object");
  if (j.value("schema_version", 0) != kProfileSchemaVersion) {
    throw ConfigError("unsupported profile schema version");
  }
  if (!j.contains("spec")) throw ConfigError("profile has no spec");
  VulnerabilityProfile p = generate_profile(spec_from_json(j.at("spec")));
  if (!j.contains("cells")) return p;

  std::vector<VulnerableCell> cells;
  try {
    for (const auto& c : j.at("cells")) {
      VulnerableCell cell;
      cell.row = c.at("row").get<std::uint32_t>();
      cell.bit_index = c.at("bit").get<std::uint32_t>();
      cell.threshold = c.at("threshold").get<std::uint32_t>();
      cell.offset = c.at("offset").get<int>();
      cell.side = side_for_offset(cell.offset);
      for (const auto& name : c.at("patterns")) {
        cell.patterns.insert(pattern_from_string(name.get<std::string>()));
      }
      if (cell.row >= p.spec.rows || cell.bit_index >= p.bits_per_row()) {
        throw ConfigError("profile cell out of range");
      }
      cells.push_back(cell);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad profile cell: ") + e.what());
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const VulnerableCell& a, const VulnerableCell& b) { return a.threshold < b.threshold; });
  if (cells.empty() || cells.front().threshold != p.spec.hc_first_min) {
    throw ConfigError("profile cells disagree with hc_first_min");
  }
  p.cells = std::move(cells);
  return p;
}

void save_profile(const std::string& path, const VulnerabilityProfile& profile, bool include_cells) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write profile to '" + path + "'");
  out << profile_to_json(profile, include_cells).dump(2) << '\n';
  if (!out) throw Error("failed writing profile to '" + path + "'");
}

VulnerabilityProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("profile '" + path + "' is not valid JSON: " + e.what());
  }
  return profile_from_json(j);
}

}  // namespace rhsim::fault

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rhsim/common.hpp"
#include "rhsim/dram/bank.hpp"
#include "rhsim/dram/config.hpp"
#include "rhsim/dram/mapping.hpp"

namespace rhsim::mitigation {

enum class Mechanism { None, IncreasedRefresh, PARA, ProHIT, MRLoc, TWiCe, TWiCeIdeal, Ideal };

std::string_view to_string(Mechanism m);
Mechanism mechanism_from_string(std::string_view s);
std::vector<Mechanism> all_mechanisms();

struct RefreshDirective {
  dram::RowAddress target;
  Mechanism reason = Mechanism::None;
};

using DirectiveList = std::vector<RefreshDirective>;

/// Consumes the activation and refresh stream of one memory system and
/// emits single-row refresh directives.
class Policy {
 public:
  Policy(const dram::DramConfig& cfg, dram::RowMapping mapping);
  virtual ~Policy() = default;

  virtual Mechanism mechanism() const = 0;
  /// Called for every ACT the controller issues.
  virtual void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) = 0;
  /// Called for every REF; rows [first, last) of every bank were refreshed.
  virtual void on_ref(std::uint32_t first, std::uint32_t last, Cycle now, DirectiveList& out);
  /// REF interval to use instead of the configured one, if any.
  virtual std::optional<Cycle> refresh_interval() const { return std::nullopt; }

  const dram::DramConfig& config() const { return cfg_; }
  const dram::RowMapping& mapping() const { return mapping_; }

 protected:
  /// Physically adjacent victims of an aggressor (distance 1).
  dram::NeighborList victims(std::uint32_t row) const { return mapping_.adjacent_rows(row, 1); }
  std::uint32_t bank_index(const dram::RowAddress& a) const { return a.flat_bank(cfg_); }
  void emit(DirectiveList& out, const dram::RowAddress& bank, std::uint32_t row) const;

  dram::DramConfig cfg_;
  dram::RowMapping mapping_;
};

class NoMitigation final : public Policy {
 public:
  using Policy::Policy;
  Mechanism mechanism() const override { return Mechanism::None; }
  void on_activate(const dram::RowAddress&, Cycle, DirectiveList&) override {}
};

/// Shortens the refresh window to hc_first * t_rc; no directives.
class IncreasedRefresh final : public Policy {
 public:
  IncreasedRefresh(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first);
  Mechanism mechanism() const override { return Mechanism::IncreasedRefresh; }
  void on_activate(const dram::RowAddress&, Cycle, DirectiveList&) override {}
  std::optional<Cycle> refresh_interval() const override { return t_refi_; }

 private:
  Cycle t_refi_;
};

/// Each ACT refreshes each physical neighbor independently with p/2.
class Para final : public Policy {
 public:
  Para(const dram::DramConfig& cfg, dram::RowMapping mapping, double p, std::uint64_t seed);
  /// Refreshes each neighbor with probability q (q = p/2 for the usual form).
  static std::unique_ptr<Para> with_neighbor_probability(const dram::DramConfig& cfg, dram::RowMapping mapping,
                                                         double q, std::uint64_t seed);
  Mechanism mechanism() const override { return Mechanism::PARA; }
  void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) override;
  double p() const { return 2.0 * q_; }
  double neighbor_probability() const { return q_; }

 private:
  double q_;
  std::mt19937_64 rng_;
};

struct ProHitParams {
  std::uint32_t hot_capacity = 4;
  std::uint32_t cold_capacity = 4;
  double p_insert = 0.0277;
  double p_evict = 0.5;
  double p_promote = 0.5;
};

/// Hot/cold victim tables; the hot top is refreshed at every REF.
class ProHit final : public Policy {
 public:
  struct Tables {
    std::vector<std::uint32_t> hot;    // index 0 = top priority
    std::deque<std::uint32_t> cold;    // index 0 = oldest insertion
  };

  ProHit(const dram::DramConfig& cfg, dram::RowMapping mapping, ProHitParams params, std::uint64_t seed);
  Mechanism mechanism() const override { return Mechanism::ProHIT; }
  void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) override;
  void on_ref(std::uint32_t first, std::uint32_t last, Cycle now, DirectiveList& out) override;

  /// Updates the tables of one bank for one victim row.
  void touch(std::uint32_t bank, std::uint32_t victim);
  Tables& tables(std::uint32_t bank) { return tables_.at(bank); }
  const ProHitParams& params() const { return params_; }

 private:
  ProHitParams params_;
  std::mt19937_64 rng_;
  std::vector<Tables> tables_;
};

struct MrlocParams {
  std::uint32_t queue_capacity = 16;
  double p_max = 0.05;
  double p_min = 0.0;
  /// Gap (in t_rc units) at which the refresh probability reaches p_min.
  double horizon_trc = 64.0;
};

/// Victim queue; a re-inserted victim is refreshed with a probability that
/// falls linearly with the time since its previous insertion.
class Mrloc final : public Policy {
 public:
  struct Entry {
    std::uint32_t row = 0;
    Cycle inserted = 0;
  };

  Mrloc(const dram::DramConfig& cfg, dram::RowMapping mapping, MrlocParams params, std::uint64_t seed);
  Mechanism mechanism() const override { return Mechanism::MRLoc; }
  void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) override;

  double refresh_probability(Cycle gap) const;
  const std::deque<Entry>& queue(std::uint32_t bank) const { return queues_.at(bank); }

 private:
  MrlocParams params_;
  Cycle horizon_;
  std::mt19937_64 rng_;
  std::vector<std::deque<Entry>> queues_;
};

/// Victim-keyed activation counters with rate-based pruning at each REF.
class Twice final : public Policy {
 public:
  struct Entry {
    std::uint64_t act_count = 0;
    std::uint64_t life_count = 0;
    bool valid = false;
  };

  /// Throws UnsupportedConfig when t_RH < 8192 and `ideal` is false.
  Twice(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first, bool ideal);
  Mechanism mechanism() const override { return ideal_ ? Mechanism::TWiCeIdeal : Mechanism::TWiCe; }
  void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) override;
  void on_ref(std::uint32_t first, std::uint32_t last, Cycle now, DirectiveList& out) override;

  /// Ages every entry and drops those below the pruning rate.
  void prune();
  std::uint32_t t_rh() const { return t_rh_; }
  double pruning_threshold() const { return pruning_threshold_; }
  std::size_t occupancy() const;
  std::size_t occupancy(std::uint32_t bank) const { return active_.at(bank).size(); }
  const Entry& entry(std::uint32_t bank, std::uint32_t row) const { return entries_.at(bank).at(row); }

 private:
  std::uint32_t t_rh_;
  double pruning_threshold_;
  bool ideal_;
  std::vector<std::vector<Entry>> entries_;
  std::vector<std::vector<std::uint32_t>> active_;
};

/// Oracle: refreshes a victim right before its hc_first-th un-refreshed
/// adjacent activation.
class Ideal final : public Policy {
 public:
  Ideal(const dram::DramConfig& cfg, dram::RowMapping mapping, std::uint32_t hc_first);
  Mechanism mechanism() const override { return Mechanism::Ideal; }
  void on_activate(const dram::RowAddress& aggressor, Cycle now, DirectiveList& out) override;
  void on_ref(std::uint32_t first, std::uint32_t last, Cycle now, DirectiveList& out) override;

  std::uint32_t counter(std::uint32_t bank, std::uint32_t row) const { return counters_.at(bank).at(row); }

 private:
  std::uint32_t hc_first_;
  std::vector<std::vector<std::uint32_t>> counters_;
};

struct MechanismParams {
  Mechanism mechanism = Mechanism::None;
  std::uint32_t hc_first = 0;
  double para_ber_per_hour = 1e-15;
  /// Fixed PARA probability; bypasses tuning when set.
  std::optional<double> para_p;
  ProHitParams prohit;
  MrlocParams mrloc;
  std::uint64_t seed = 1;
};

/// Tuned values and support status of one (mechanism, hc_first) pair.
struct TunedMechanism {
  bool supported = true;
  std::string na_reason;
  std::map<std::string, double> values;
  std::vector<std::string> notes;
};

/// Support rules: IncreasedRefresh below 32k and TWiCe below t_RH = 8192
/// are unsupported; ProHIT and MRLoc only at hc_first = 2000. PARA falls
/// back to p = 1 with a note when the target cannot be met.
TunedMechanism tune(const MechanismParams& params, const dram::DramConfig& cfg);

/// Builds the policy; throws UnsupportedConfig for unsupported pairs.
std::unique_ptr<Policy> make_policy(const MechanismParams& params, const dram::DramConfig& cfg,
                                    const dram::RowMapping& mapping);

}  // namespace rhsim::mitigation

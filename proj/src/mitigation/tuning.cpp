#include "rhsim/mitigation/tuning.hpp"

#include <cmath>
#include <string>

#include "rhsim/common.hpp"

namespace rhsim::mitigation {

double para_attempt_failure(double p, std::uint32_t hc_first) {
  return std::pow(1.0 - p / 2.0, static_cast<double>(hc_first));
}

double para_tune_attempts(std::uint32_t hc_first, double ber_target, double attempts) {
  if (hc_first < 1) throw RangeError("hc_first must be >= 1");
  if (!(ber_target > 0.0 && ber_target < 1.0)) throw RangeError("ber_target must be in (0, 1)");
  if (!(attempts > 0.0)) throw RangeError("attempts must be positive");
  const double per_attempt = ber_target / attempts;
  if (per_attempt >= 1.0) return 0.0;
  // (1 - p/2) = per_attempt^(1/hc); expm1 keeps precision for tiny p.
  const double p = -2.0 * std::expm1(std::log(per_attempt) / hc_first);
  if (p > 1.0) {
    throw InfeasibleError("no PARA probability <= 1 meets the target at hc_first = " +
                          std::to_string(hc_first) + " (needs p = " + std::to_string(p) + ")");
  }
  return p;
}

double para_tune(std::uint32_t hc_first, double ber_target_per_hour, double t_rc_ns) {
  if (hc_first < 1) throw RangeError("hc_first must be >= 1");
  if (!(t_rc_ns > 0)) throw RangeError("t_rc must be positive");
  const double attempts = 3600.0 / (static_cast<double>(hc_first) * t_rc_ns * 1e-9);
  return para_tune_attempts(hc_first, ber_target_per_hour, attempts);
}

TwiceThresholds twice_thresholds(std::uint32_t hc_first, double t_refw_ms, double t_refi_us, bool ideal) {
  if (hc_first < 4) throw RangeError("hc_first must be >= 4");
  TwiceThresholds t;
  t.t_rh = hc_first / 4;
  const double refs = t_refw_ms * 1000.0 / t_refi_us;
  t.pruning_threshold = t.t_rh / refs;
  if (!ideal && t.t_rh < kTwiceMinThreshold) {
    throw UnsupportedConfig("TWiCe needs t_RH >= 8192 (hc_first >= 32768), got hc_first = " +
                            std::to_string(hc_first));
  }
  return t;
}

RefreshWindow increased_refresh_window(std::uint32_t hc_first, double t_rc_ns) {
  if (hc_first < 1) throw RangeError("hc_first must be >= 1");
  RefreshWindow w;
  w.t_refw_ms = static_cast<double>(hc_first) * t_rc_ns / 1e6;
  w.supported = hc_first >= kIncreasedRefreshMinHc;
  return w;
}

}  // namespace rhsim::mitigation

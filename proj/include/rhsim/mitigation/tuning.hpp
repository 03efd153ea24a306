#pragma once

#include <cstdint>

namespace rhsim::mitigation {

/// Smallest HC_first at which the counter table and the faster refresh
/// schedule are still meaningful.
inline constexpr std::uint32_t kTwiceMinThreshold = 8192;
inline constexpr std::uint32_t kIncreasedRefreshMinHc = 32000;

/// Minimal PARA probability p such that
///   (1 - p/2)^hc_first * attempts <= ber_target,
/// with attempts = 3600 s / (hc_first * t_rc) per hour. Throws
/// InfeasibleError when p would exceed 1.
double para_tune(std::uint32_t hc_first, double ber_target_per_hour, double t_rc_ns);

/// Same bound for a given number of attack attempts (1 = per attempt).
double para_tune_attempts(std::uint32_t hc_first, double ber_target, double attempts);

/// Failure probability of one attempt: (1 - p/2)^hc_first.
double para_attempt_failure(double p, std::uint32_t hc_first);

struct TwiceThresholds {
  std::uint32_t t_rh = 0;
  double pruning_threshold = 0.0;
};

/// t_RH = hc_first / 4, pruning threshold = t_RH / (t_refw / t_refi).
/// Throws UnsupportedConfig for t_RH < 8192 unless `ideal`.
TwiceThresholds twice_thresholds(std::uint32_t hc_first, double t_refw_ms, double t_refi_us,
                                 bool ideal = false);

struct RefreshWindow {
  double t_refw_ms = 0.0;
  bool supported = false;
};

/// t_refw' = hc_first * t_rc; unsupported below 32k.
RefreshWindow increased_refresh_window(std::uint32_t hc_first, double t_rc_ns);

}  // namespace rhsim::mitigation

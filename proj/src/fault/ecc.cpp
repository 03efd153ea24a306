#include "rhsim/fault/ecc.hpp"

#include <algorithm>

#include "rhsim/common.hpp"

namespace rhsim::fault {

std::string_view to_string(EccAction a) {
  switch (a) {
    case EccAction::corrected: return "corrected";
    case EccAction::unchanged: return "unchanged";
    case EccAction::miscorrected: return "miscorrected";
  }
  return "?";
}

SecCode::SecCode(std::uint32_t data_bits) : data_bits_(data_bits), check_bits_(2) {
  if (data_bits == 0) throw RangeError("SEC code needs at least one data bit");
  while ((1u << check_bits_) - check_bits_ - 1 < data_bits) ++check_bits_;
  if (check_bits_ > 20) throw RangeError("SEC code too large");
  columns_.reserve(codeword_bits());
  for (std::uint32_t v = 3; columns_.size() < data_bits; ++v) {
    if ((v & (v - 1)) != 0) columns_.push_back(v);
  }
  for (std::uint32_t j = 0; j < check_bits_; ++j) columns_.push_back(1u << j);
  by_syndrome_.assign(std::size_t{1} << check_bits_, -1);
  for (std::uint32_t p = 0; p < columns_.size(); ++p) by_syndrome_[columns_[p]] = static_cast<std::int32_t>(p);
}

std::uint32_t SecCode::column(std::uint32_t position) const { return columns_.at(position); }

std::uint32_t SecCode::encode(const Bits& data) const {
  if (data.size() != data_bits_) throw RangeError("data word has wrong width");
  std::uint32_t parity = 0;
  for (std::uint32_t i = 0; i < data_bits_; ++i) {
    if (data[i] & 1u) parity ^= columns_[i];
  }
  return parity;
}

std::uint32_t SecCode::syndrome(const Bits& data, std::uint32_t parity) const {
  return encode(data) ^ parity;
}

std::uint32_t SecCode::error_syndrome(const std::vector<std::uint32_t>& positions) const {
  std::uint32_t s = 0;
  for (auto p : positions) s ^= column(p);
  return s;
}

std::optional<std::uint32_t> SecCode::correction(std::uint32_t syndrome) const {
  if (syndrome == 0 || syndrome >= by_syndrome_.size()) return std::nullopt;
  const auto p = by_syndrome_[syndrome];
  if (p < 0) return std::nullopt;
  return static_cast<std::uint32_t>(p);
}

EccResult on_die_ecc_decode(const SecCode& code, const Bits& data_word, std::uint32_t parity,
                            const std::vector<std::uint32_t>& injected_flips) {
  Bits received = data_word;
  std::uint32_t received_parity = parity;
  for (auto p : injected_flips) {
    if (p < code.data_bits()) {
      received.at(p) ^= 1u;
    } else if (p < code.codeword_bits()) {
      received_parity ^= 1u << (p - code.data_bits());
    } else {
      throw RangeError("flip position outside the codeword");
    }
  }
  EccResult r;
  const auto fix = code.correction(code.syndrome(received, received_parity));
  if (fix && *fix < code.data_bits()) received[*fix] ^= 1u;
  r.observed = std::move(received);
  if (!fix) {
    r.action = EccAction::unchanged;
  } else if (std::find(injected_flips.begin(), injected_flips.end(), *fix) != injected_flips.end()) {
    r.action = EccAction::corrected;
  } else {
    r.action = *fix < code.data_bits() ? EccAction::miscorrected : EccAction::unchanged;
  }
  return r;
}

std::vector<std::uint32_t> visible_errors(const SecCode& code,
                                          const std::vector<std::uint32_t>& injected_flips) {
  std::vector<std::uint32_t> out;
  for (auto p : injected_flips) {
    if (p < code.data_bits()) out.push_back(p);
  }
  const auto fix = code.correction(code.error_syndrome(injected_flips));
  if (fix && *fix < code.data_bits()) {
    auto it = std::find(out.begin(), out.end(), *fix);
    if (it != out.end()) {
      out.erase(it);
    } else {
      out.push_back(*fix);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rhsim::fault

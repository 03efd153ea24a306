#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace rhsim::fault {

/// One bit per element, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

enum class EccAction { corrected, unchanged, miscorrected };

std::string_view to_string(EccAction a);

/// Single-error-correcting Hamming code over `data_bits` data bits.
///
/// Codeword positions 0..data_bits-1 are data, data_bits..data_bits+r-1 are
/// check bits. Check bit j has the unit column 1<<j; data bit i has the i-th
/// integer >= 3 that is not a power of two. The code is shortened, so some
/// nonzero syndromes match no column and are left uncorrected.
class SecCode {
 public:
  explicit SecCode(std::uint32_t data_bits = 128);

  std::uint32_t data_bits() const { return data_bits_; }
  std::uint32_t check_bits() const { return check_bits_; }
  std::uint32_t codeword_bits() const { return data_bits_ + check_bits_; }
  /// Parity-check column of a codeword position.
  std::uint32_t column(std::uint32_t position) const;

  std::uint32_t encode(const Bits& data) const;
  std::uint32_t syndrome(const Bits& data, std::uint32_t parity) const;
  /// Syndrome produced by an error pattern alone (the code is linear).
  std::uint32_t error_syndrome(const std::vector<std::uint32_t>& positions) const;
  /// Codeword position the decoder flips for a syndrome, if any.
  std::optional<std::uint32_t> correction(std::uint32_t syndrome) const;

 private:
  std::uint32_t data_bits_;
  std::uint32_t check_bits_;
  std::vector<std::uint32_t> columns_;
  std::vector<std::int32_t> by_syndrome_;
};

struct EccResult {
  Bits observed;
  EccAction action = EccAction::unchanged;
};

/// Decodes a stored word after `injected_flips` (codeword positions) hit it.
/// `parity` must be the check bits of the original data.
EccResult on_die_ecc_decode(const SecCode& code, const Bits& data_word, std::uint32_t parity,
                            const std::vector<std::uint32_t>& injected_flips);

/// Data positions that read back wrong after decoding, sorted.
std::vector<std::uint32_t> visible_errors(const SecCode& code,
                                          const std::vector<std::uint32_t>& injected_flips);

}  // namespace rhsim::fault

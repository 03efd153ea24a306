#pragma once

#include <cstdint>
#include <string_view>

#include "rhsim/dram/bank.hpp"
#include "rhsim/dram/config.hpp"

namespace rhsim::memctrl {

/// Field order of a byte address, most significant first.
enum class AddressScheme {
  /// row : bank_group : bank : column. Consecutive row-sized chunks land in
  /// consecutive banks.
  RowBankGroupBankColumn,
  /// row : column : bank_group : bank : line offset. Consecutive cache lines
  /// land in consecutive banks.
  RowColumnBankGroupBank,
};

std::string_view to_string(AddressScheme s);
AddressScheme address_scheme_from_string(std::string_view s);

struct DecodedAddress {
  dram::RowAddress row;
  std::uint32_t column = 0;  // byte offset inside the row
};

/// Mixed-radix byte address <-> DRAM coordinate map. A bijection on
/// [0, capacity); larger addresses wrap.
class AddressMap {
 public:
  static constexpr std::uint32_t kLineBytes = 64;

  AddressMap(const dram::DramConfig& cfg, AddressScheme scheme = AddressScheme::RowBankGroupBankColumn);

  DecodedAddress decode(std::uint64_t address) const;
  std::uint64_t encode(const DecodedAddress& d) const;

  std::uint64_t capacity() const { return capacity_; }
  AddressScheme scheme() const { return scheme_; }

 private:
  dram::DramConfig cfg_;
  AddressScheme scheme_;
  std::uint64_t capacity_;
};

}  // namespace rhsim::memctrl

#include "rhsim/memctrl/address_map.hpp"

#include <string>

namespace rhsim::memctrl {

std::string_view to_string(AddressScheme s) {
  switch (s) {
    case AddressScheme::RowBankGroupBankColumn: return "row:bank_group:bank:column";
    case AddressScheme::RowColumnBankGroupBank: return "row:column:bank_group:bank";
  }
  return "?";
}

AddressScheme address_scheme_from_string(std::string_view s) {
  if (s == "row:bank_group:bank:column" || s == "RoBgBaCo") return AddressScheme::RowBankGroupBankColumn;
  if (s == "row:column:bank_group:bank" || s == "RoCoBgBa") return AddressScheme::RowColumnBankGroupBank;
  throw ConfigError("unknown address scheme '" + std::string(s) + "'");
}

AddressMap::AddressMap(const dram::DramConfig& cfg, AddressScheme scheme)
    : cfg_(cfg), scheme_(scheme), capacity_(cfg.capacity_bytes()) {
  if (cfg.row_size_bytes % kLineBytes != 0) throw ConfigError("row size must be a multiple of 64 bytes");
}

DecodedAddress AddressMap::decode(std::uint64_t address) const {
  std::uint64_t a = address % capacity_;
  DecodedAddress d;
  auto take = [&a](std::uint64_t radix) {
    const auto v = static_cast<std::uint32_t>(a % radix);
    a /= radix;
    return v;
  };
  if (scheme_ == AddressScheme::RowBankGroupBankColumn) {
    d.column = take(cfg_.row_size_bytes);
    d.row.bank = take(cfg_.banks_per_group);
    d.row.bank_group = take(cfg_.bank_groups);
  } else {
    const std::uint32_t offset = take(kLineBytes);
    d.row.bank = take(cfg_.banks_per_group);
    d.row.bank_group = take(cfg_.bank_groups);
    d.column = take(cfg_.row_size_bytes / kLineBytes) * kLineBytes + offset;
  }
  d.row.rank = take(cfg_.ranks);
  d.row.channel = take(cfg_.channels);
  d.row.row = static_cast<std::uint32_t>(a);
  return d;
}

std::uint64_t AddressMap::encode(const DecodedAddress& d) const {
  d.row.validate(cfg_);
  if (d.column >= cfg_.row_size_bytes) throw RangeError("column out of range");
  std::uint64_t a = d.row.row;
  auto put = [&a](std::uint64_t v, std::uint64_t radix) { a = a * radix + v; };
  put(d.row.channel, cfg_.channels);
  put(d.row.rank, cfg_.ranks);
  if (scheme_ == AddressScheme::RowBankGroupBankColumn) {
    put(d.row.bank_group, cfg_.bank_groups);
    put(d.row.bank, cfg_.banks_per_group);
    put(d.column, cfg_.row_size_bytes);
  } else {
    put(d.column / kLineBytes, cfg_.row_size_bytes / kLineBytes);
    put(d.row.bank_group, cfg_.bank_groups);
    put(d.row.bank, cfg_.banks_per_group);
    put(d.column % kLineBytes, kLineBytes);
  }
  return a;
}

}  // namespace rhsim::memctrl

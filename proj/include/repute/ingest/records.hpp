#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repute/evm/disassembler.hpp"

namespace repute::ingest {

/// Non-negative wei amount; 128 bits covers total ether supply with headroom.
class Wei {
 public:
  Wei() = default;
  explicit Wei(unsigned __int128 v) : value_(v) {}

  /// Decimal digits only; throws ParseError otherwise (including overflow).
  static Wei parse(std::string_view decimal);
  std::string to_string() const;
  double to_double() const { return static_cast<double>(value_); }
  unsigned __int128 raw() const { return value_; }

  friend auto operator<=>(const Wei&, const Wei&) = default;

 private:
  unsigned __int128 value_ = 0;
};

enum class Label { Reputable, Illicit, Unlabelled };

std::string_view label_name(Label l);
/// Accepts "reputable"/"illicit"/"unlabelled" (case-insensitive) and "0"/"1".
Label parse_label(std::string_view s);

struct TxRecord {
  std::int64_t block_number = 0;
  std::int64_t timestamp = 0;
  std::string from_addr;
  std::string to_addr;
  Wei value;
  std::int64_t gas_used = 0;
  Wei gas_price;
  bool is_error = false;
  bool is_internal = false;

  friend bool operator==(const TxRecord&, const TxRecord&) = default;
};

struct ContractRecord {
  std::string address;
  evm::Bytecode bytecode;
  Label label = Label::Unlabelled;
  std::vector<TxRecord> transactions;
  std::vector<TxRecord> internal_transactions;

  friend bool operator==(const ContractRecord&, const ContractRecord&) = default;
};

/// Parses one entry of an Etherscan txlist / txlistinternal result array.
/// Etherscan encodes every field as a decimal string; plain numbers are accepted too.
TxRecord tx_from_json(const nlohmann::json& j, bool is_internal);
nlohmann::ordered_json tx_to_json(const TxRecord& tx);

/// Fixture object {address, bytecode, txlist, txlistinternal}; label comes from labels.csv.
ContractRecord contract_from_json(const nlohmann::json& j);
nlohmann::ordered_json contract_to_json(const ContractRecord& c);

/// Lowercases and validates a 20-byte hex address ("0x" + 40 hex digits).
std::string normalize_address(std::string_view addr);

/// Normal and internal transactions merged, stably sorted by (timestamp, block_number).
std::vector<TxRecord> merge_transactions(const ContractRecord& record);

}  // namespace repute::ingest

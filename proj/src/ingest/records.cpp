#include "repute/ingest/records.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"

namespace repute::ingest {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string field_text(const nlohmann::json& j, const char* key, bool required = true) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(std::string("transaction field missing: ") + key, 0);
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  if (it->is_boolean()) return it->get<bool>() ? "1" : "0";
  throw ParseError(std::string("transaction field has unsupported type: ") + key, 0);
}

std::int64_t parse_int(const std::string& s, const char* key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("not an integer in field ") + key + ": '" + s + "'", 0);
  }
}

}  // namespace

Wei Wei::parse(std::string_view decimal) {
  if (decimal.empty()) throw ParseError("empty wei amount", 0);
  constexpr unsigned __int128 kMax = ~static_cast<unsigned __int128>(0);
  unsigned __int128 v = 0;
  for (std::size_t i = 0; i < decimal.size(); ++i) {
    const char c = decimal[i];
    if (c < '0' || c > '9') throw ParseError("non-digit in wei amount", i);
    const auto d = static_cast<unsigned>(c - '0');
    if (v > (kMax - d) / 10) throw ParseError("wei amount overflows 128 bits", i);
    v = v * 10 + d;
  }
  return Wei(v);
}

std::string Wei::to_string() const {
  if (value_ == 0) return "0";
  std::string out;
  unsigned __int128 v = value_;
  while (v > 0) {
    out += static_cast<char>('0' + static_cast<int>(v % 10));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string_view label_name(Label l) {
  switch (l) {
    case Label::Reputable:
      return "reputable";
    case Label::Illicit:
      return "illicit";
    case Label::Unlabelled:
      return "unlabelled";
  }
  return "unlabelled";
}

Label parse_label(std::string_view s) {
  const std::string v = lower(s);
  if (v == "reputable" || v == "0") return Label::Reputable;
  if (v == "illicit" || v == "1") return Label::Illicit;
  if (v == "unlabelled" || v == "unlabeled" || v.empty()) return Label::Unlabelled;
  throw ParseError("unknown label '" + std::string(s) + "'", 0);
}

std::string normalize_address(std::string_view addr) {
  std::string a = lower(addr);
  if (a.rfind("0x", 0) != 0) a = "0x" + a;
  if (a.size() != 42) throw ParseError("address must be 20 bytes of hex: '" + std::string(addr) + "'", 0);
  for (std::size_t i = 2; i < a.size(); ++i) {
    if (!std::isxdigit(static_cast<unsigned char>(a[i]))) {
      throw ParseError("non-hex character in address '" + std::string(addr) + "'", (i - 2) / 2);
    }
  }
  return a;
}

TxRecord tx_from_json(const nlohmann::json& j, bool is_internal) {
  if (!j.is_object()) throw ParseError("transaction entry is not an object", 0);
  TxRecord tx;
  tx.is_internal = is_internal;
  tx.block_number = parse_int(field_text(j, "blockNumber"), "blockNumber");
  tx.timestamp = parse_int(field_text(j, "timeStamp"), "timeStamp");
  if (tx.timestamp <= 0) throw ParseError("timeStamp must be positive", 0);
  tx.from_addr = lower(field_text(j, "from", false));
  tx.to_addr = lower(field_text(j, "to", false));
  const std::string value = field_text(j, "value", false);
  tx.value = value.empty() ? Wei{} : Wei::parse(value);
  const std::string gas_used = field_text(j, "gasUsed", false);
  tx.gas_used = gas_used.empty() ? 0 : parse_int(gas_used, "gasUsed");
  if (tx.gas_used < 0) throw ParseError("gasUsed must be non-negative", 0);
  const std::string gas_price = field_text(j, "gasPrice", false);
  tx.gas_price = gas_price.empty() ? Wei{} : Wei::parse(gas_price);
  const std::string is_error = field_text(j, "isError", false);
  tx.is_error = !is_error.empty() && is_error != "0";
  return tx;
}

nlohmann::ordered_json tx_to_json(const TxRecord& tx) {
  nlohmann::ordered_json j;
  j["blockNumber"] = std::to_string(tx.block_number);
  j["timeStamp"] = std::to_string(tx.timestamp);
  j["from"] = tx.from_addr;
  j["to"] = tx.to_addr;
  j["value"] = tx.value.to_string();
  j["gasUsed"] = std::to_string(tx.gas_used);
  if (!tx.is_internal) j["gasPrice"] = tx.gas_price.to_string();
  j["isError"] = tx.is_error ? "1" : "0";
  return j;
}

ContractRecord contract_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("contract fixture is not a JSON object", 0);
  ContractRecord c;
  c.address = normalize_address(j.at("address").get<std::string>());
  if (auto it = j.find("bytecode"); it != j.end() && !it->is_null()) {
    c.bytecode = evm::Bytecode::from_hex(it->get<std::string>());
  }
  if (auto it = j.find("txlist"); it != j.end()) {
    for (const auto& t : *it) c.transactions.push_back(tx_from_json(t, false));
  }
  if (auto it = j.find("txlistinternal"); it != j.end()) {
    for (const auto& t : *it) c.internal_transactions.push_back(tx_from_json(t, true));
  }
  return c;
}

nlohmann::ordered_json contract_to_json(const ContractRecord& c) {
  nlohmann::ordered_json j;
  j["address"] = c.address;
  j["bytecode"] = c.bytecode.to_hex();
  auto txs = nlohmann::ordered_json::array();
  for (const auto& t : c.transactions) txs.push_back(tx_to_json(t));
  auto internal = nlohmann::ordered_json::array();
  for (const auto& t : c.internal_transactions) internal.push_back(tx_to_json(t));
  j["txlist"] = std::move(txs);
  j["txlistinternal"] = std::move(internal);
  return j;
}

std::vector<TxRecord> merge_transactions(const ContractRecord& record) {
  std::vector<TxRecord> out;
  out.reserve(record.transactions.size() + record.internal_transactions.size());
  out.insert(out.end(), record.transactions.begin(), record.transactions.end());
  out.insert(out.end(), record.internal_transactions.begin(), record.internal_transactions.end());
  std::stable_sort(out.begin(), out.end(), [](const TxRecord& a, const TxRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.block_number < b.block_number;
  });
  return out;
}

}  // namespace repute::ingest

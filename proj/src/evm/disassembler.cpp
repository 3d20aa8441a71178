#include "repute/evm/disassembler.hpp"

#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"

namespace repute::evm {
namespace {

struct OpInfo {
  std::string_view name = "UNKNOWN";
  OpcodeCategory category = OpcodeCategory::Invalid;
};

constexpr std::string_view kPushNames[] = {
    "PUSH1",  "PUSH2",  "PUSH3",  "PUSH4",  "PUSH5",  "PUSH6",  "PUSH7",  "PUSH8",
    "PUSH9",  "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16",
    "PUSH17", "PUSH18", "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24",
    "PUSH25", "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32"};
constexpr std::string_view kDupNames[] = {"DUP1",  "DUP2",  "DUP3",  "DUP4",  "DUP5",  "DUP6",
                                          "DUP7",  "DUP8",  "DUP9",  "DUP10", "DUP11", "DUP12",
                                          "DUP13", "DUP14", "DUP15", "DUP16"};
constexpr std::string_view kSwapNames[] = {"SWAP1",  "SWAP2",  "SWAP3",  "SWAP4",  "SWAP5",  "SWAP6",
                                           "SWAP7",  "SWAP8",  "SWAP9",  "SWAP10", "SWAP11", "SWAP12",
                                           "SWAP13", "SWAP14", "SWAP15", "SWAP16"};
constexpr std::string_view kLogNames[] = {"LOG0", "LOG1", "LOG2", "LOG3", "LOG4"};

// Opcode table (Shanghai instruction set plus PUSH0).
constexpr std::array<OpInfo, 256> build_table() {
  using C = OpcodeCategory;
  std::array<OpInfo, 256> t{};
  auto set = [&t](int b, std::string_view n, C c) { t[static_cast<std::size_t>(b)] = OpInfo{n, c}; };

  set(0x00, "STOP", C::System);
  set(0x01, "ADD", C::Arithmetic);
  set(0x02, "MUL", C::Arithmetic);
  set(0x03, "SUB", C::Arithmetic);
  set(0x04, "DIV", C::Arithmetic);
  set(0x05, "SDIV", C::Arithmetic);
  set(0x06, "MOD", C::Arithmetic);
  set(0x07, "SMOD", C::Arithmetic);
  set(0x08, "ADDMOD", C::Arithmetic);
  set(0x09, "MULMOD", C::Arithmetic);
  set(0x0a, "EXP", C::Arithmetic);
  set(0x0b, "SIGNEXTEND", C::Arithmetic);

  set(0x10, "LT", C::ComparisonLogic);
  set(0x11, "GT", C::ComparisonLogic);
  set(0x12, "SLT", C::ComparisonLogic);
  set(0x13, "SGT", C::ComparisonLogic);
  set(0x14, "EQ", C::ComparisonLogic);
  set(0x15, "ISZERO", C::ComparisonLogic);
  set(0x16, "AND", C::ComparisonLogic);
  set(0x17, "OR", C::ComparisonLogic);
  set(0x18, "XOR", C::ComparisonLogic);
  set(0x19, "NOT", C::ComparisonLogic);
  set(0x1a, "BYTE", C::ComparisonLogic);
  set(0x1b, "SHL", C::ComparisonLogic);
  set(0x1c, "SHR", C::ComparisonLogic);
  set(0x1d, "SAR", C::ComparisonLogic);

  set(0x20, "KECCAK256", C::Crypto);

  set(0x30, "ADDRESS", C::Environment);
  set(0x31, "BALANCE", C::Environment);
  set(0x32, "ORIGIN", C::Environment);
  set(0x33, "CALLER", C::Environment);
  set(0x34, "CALLVALUE", C::Environment);
  set(0x35, "CALLDATALOAD", C::Environment);
  set(0x36, "CALLDATASIZE", C::Environment);
  set(0x37, "CALLDATACOPY", C::Environment);
  set(0x38, "CODESIZE", C::Environment);
  set(0x39, "CODECOPY", C::Environment);
  set(0x3a, "GASPRICE", C::Environment);
  set(0x3b, "EXTCODESIZE", C::Environment);
  set(0x3c, "EXTCODECOPY", C::Environment);
  set(0x3d, "RETURNDATASIZE", C::Environment);
  set(0x3e, "RETURNDATACOPY", C::Environment);
  set(0x3f, "EXTCODEHASH", C::Environment);

  set(0x40, "BLOCKHASH", C::Block);
  set(0x41, "COINBASE", C::Block);
  set(0x42, "TIMESTAMP", C::Block);
  set(0x43, "NUMBER", C::Block);
  set(0x44, "PREVRANDAO", C::Block);
  set(0x45, "GASLIMIT", C::Block);
  set(0x46, "CHAINID", C::Block);
  set(0x47, "SELFBALANCE", C::Block);
  set(0x48, "BASEFEE", C::Block);

  set(0x50, "POP", C::StackPop);
  set(0x51, "MLOAD", C::Memory);
  set(0x52, "MSTORE", C::Memory);
  set(0x53, "MSTORE8", C::Memory);
  set(0x54, "SLOAD", C::Storage);
  set(0x55, "SSTORE", C::Storage);
  set(0x56, "JUMP", C::Flow);
  set(0x57, "JUMPI", C::Flow);
  set(0x58, "PC", C::Flow);
  set(0x59, "MSIZE", C::Memory);
  set(0x5a, "GAS", C::Flow);
  set(0x5b, "JUMPDEST", C::Flow);
  set(0x5f, "PUSH0", C::StackPop);

  for (int i = 0; i < 32; ++i) set(0x60 + i, kPushNames[i], C::Push);
  for (int i = 0; i < 16; ++i) set(0x80 + i, kDupNames[i], C::Dup);
  for (int i = 0; i < 16; ++i) set(0x90 + i, kSwapNames[i], C::Swap);
  for (int i = 0; i < 5; ++i) set(0xa0 + i, kLogNames[i], C::Log);

  set(0xf0, "CREATE", C::System);
  set(0xf1, "CALL", C::System);
  set(0xf2, "CALLCODE", C::System);
  set(0xf3, "RETURN", C::System);
  set(0xf4, "DELEGATECALL", C::System);
  set(0xf5, "CREATE2", C::System);
  set(0xfa, "STATICCALL", C::System);
  set(0xfd, "REVERT", C::System);
  set(0xfe, "INVALID", C::Invalid);
  set(0xff, "SELFDESTRUCT", C::System);
  return t;
}

constexpr auto kTable = build_table();

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Arithmetic", "ComparisonLogic", "Crypto", "Environment", "Block",
    "StackPop",   "Memory",          "Storage", "Flow",       "Push",
    "Dup",        "Swap",            "Log",     "System",     "Invalid"};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytecode Bytecode::from_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
  if (hex.size() % 2 != 0) throw ParseError("odd-length hex string", hex.size() / 2);
  Bytecode code;
  code.bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_value(hex[i]);
    const int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("non-hex character in bytecode", i / 2);
    code.bytes.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return code;
}

std::string Bytecode::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out = "0x";
  out.reserve(2 + bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0x0f];
  }
  return out;
}

std::string_view category_name(OpcodeCategory c) { return kCategoryNames.at(static_cast<std::size_t>(c)); }

const std::array<std::string_view, kCategoryCount>& category_names() { return kCategoryNames; }

std::string_view mnemonic(std::uint8_t byte_value) { return kTable[byte_value].name; }

std::size_t immediate_size(std::uint8_t byte_value) {
  return (byte_value >= 0x60 && byte_value <= 0x7f) ? static_cast<std::size_t>(byte_value - 0x5f) : 0;
}

OpcodeCategory category_of(std::uint8_t byte_value) { return kTable[byte_value].category; }

OpcodeSequence disassemble(const Bytecode& code) {
  OpcodeSequence seq;
  const auto& bytes = code.bytes;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    Opcode op;
    op.byte_value = bytes[pos];
    op.mnemonic = mnemonic(op.byte_value);
    op.offset = pos;
    const std::size_t n = immediate_size(op.byte_value);
    ++pos;
    if (n > 0) {
      op.immediate.assign(n, 0);
      const std::size_t available = std::min(n, bytes.size() - pos);
      std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), available, op.immediate.begin());
      op.truncated = available < n;
      pos += available;
    }
    seq.push_back(std::move(op));
  }
  return seq;
}

std::vector<std::uint8_t> reserialize(const OpcodeSequence& seq) {
  std::vector<std::uint8_t> out;
  for (const auto& op : seq) {
    out.push_back(op.byte_value);
    out.insert(out.end(), op.immediate.begin(), op.immediate.end());
  }
  return out;
}

CategorySequence simplify(const OpcodeSequence& seq, std::string contract_address) {
  CategorySequence out{std::move(contract_address), {}};
  out.categories.reserve(seq.size());
  for (const auto& op : seq) out.categories.push_back(static_cast<std::uint8_t>(category_of(op.byte_value)));
  return out;
}

std::string to_json_line(const CategorySequence& seq) {
  nlohmann::ordered_json j;
  j["address"] = seq.contract_address;
  j["category_ids"] = seq.categories;
  return j.dump();
}

CategorySequence category_sequence_from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("category sequence JSON: ") + e.what(), e.byte);
  }
  CategorySequence seq;
  seq.contract_address = j.at("address").get<std::string>();
  seq.categories = j.at("category_ids").get<std::vector<std::uint8_t>>();
  return seq;
}

}  // namespace repute::evm

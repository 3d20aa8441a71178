#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace repute::evm {

/// Raw contract code decoded from hex.
struct Bytecode {
  std::vector<std::uint8_t> bytes;

  /// Accepts an optional "0x"/"0X" prefix; throws ParseError on odd length or non-hex digits.
  static Bytecode from_hex(std::string_view hex);
  /// Lowercase, "0x"-prefixed.
  std::string to_hex() const;

  friend bool operator==(const Bytecode&, const Bytecode&) = default;
};

struct Opcode {
  std::string_view mnemonic;
  std::uint8_t byte_value = 0;
  /// PUSH1..PUSH32 immediates, always exactly N bytes (zero-padded when truncated).
  std::vector<std::uint8_t> immediate;
  std::size_t offset = 0;
  /// Set when the code ended before all N immediate bytes were read.
  bool truncated = false;

  friend bool operator==(const Opcode&, const Opcode&) = default;
};

using OpcodeSequence = std::vector<Opcode>;

enum class OpcodeCategory : std::uint8_t {
  Arithmetic = 0,
  ComparisonLogic,
  Crypto,
  Environment,
  Block,
  StackPop,
  Memory,
  Storage,
  Flow,
  Push,
  Dup,
  Swap,
  Log,
  System,
  Invalid,
};

inline constexpr std::size_t kCategoryCount = 15;

std::string_view category_name(OpcodeCategory c);
const std::array<std::string_view, kCategoryCount>& category_names();

/// Mnemonic for a byte value; "UNKNOWN" for unassigned bytes.
std::string_view mnemonic(std::uint8_t byte_value);
/// Immediate width (1..32 for PUSH1..PUSH32, else 0).
std::size_t immediate_size(std::uint8_t byte_value);
/// Total over all 256 byte values.
OpcodeCategory category_of(std::uint8_t byte_value);

OpcodeSequence disassemble(const Bytecode& code);

/// Opcode bytes followed by their (padded) immediates.
std::vector<std::uint8_t> reserialize(const OpcodeSequence& seq);

struct CategorySequence {
  std::string contract_address;
  std::vector<std::uint8_t> categories;

  friend bool operator==(const CategorySequence&, const CategorySequence&) = default;
};

CategorySequence simplify(const OpcodeSequence& seq, std::string contract_address = {});

/// {"address": ..., "category_ids": [...]} on one line.
std::string to_json_line(const CategorySequence& seq);
CategorySequence category_sequence_from_json_line(std::string_view line);

}  // namespace repute::evm

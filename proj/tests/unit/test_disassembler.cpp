#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "repute/common/error.hpp"
#include "repute/evm/disassembler.hpp"

using namespace repute;
using namespace repute::evm;

TEST(Disassembler, HandAssembledCases) {
  for (const auto& c : oracle::disasm_cases()) {
    SCOPED_TRACE(c.hex);
    const auto seq = disassemble(Bytecode::from_hex(c.hex));
    ASSERT_EQ(seq.size(), c.ops.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      EXPECT_EQ(seq[i].mnemonic, c.ops[i].mnemonic) << "op " << i;
      EXPECT_EQ(seq[i].immediate, c.ops[i].immediate) << "op " << i;
      EXPECT_EQ(seq[i].truncated, c.ops[i].truncated) << "op " << i;
    }
    EXPECT_EQ(simplify(seq).categories, c.categories);
  }
}

TEST(Disassembler, OffsetsAdvancePastImmediates) {
  const auto seq = disassemble(Bytecode::from_hex("0x600160020100"));
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_EQ(seq[0].offset, 0u);
  EXPECT_EQ(seq[1].offset, 2u);
  EXPECT_EQ(seq[2].offset, 4u);
  EXPECT_EQ(seq[3].offset, 5u);
}

TEST(Disassembler, TruncatedPushReserializesPadded) {
  const auto seq = disassemble(Bytecode::from_hex("0x61ff"));
  EXPECT_EQ(reserialize(seq), (std::vector<std::uint8_t>{0x61, 0xff, 0x00}));
}

TEST(Disassembler, BadHexReportsOffset) {
  try {
    Bytecode::from_hex("0x60zz");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 1u);
  }
  EXPECT_THROW(Bytecode::from_hex("0x601"), ParseError);
}

TEST(Disassembler, HexRoundTrip) {
  EXPECT_EQ(Bytecode::from_hex("0xDEADbeef").to_hex(), "0xdeadbeef");
  EXPECT_EQ(Bytecode::from_hex("").to_hex(), "0x");
}

TEST(Disassembler, CategoryTotality) {
  for (int b = 0; b < 256; ++b) {
    const Bytecode code{{static_cast<std::uint8_t>(b)}};
    const auto cats = simplify(disassemble(code)).categories;
    ASSERT_EQ(cats.size(), 1u) << b;
    EXPECT_LT(cats[0], kCategoryCount);
    EXPECT_EQ(cats[0], static_cast<std::uint8_t>(category_of(static_cast<std::uint8_t>(b))));
  }
  EXPECT_EQ(category_names().size(), kCategoryCount);
}

TEST(Disassembler, RandomRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint8_t> bytes(rng() % 96);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    const auto seq = disassemble(Bytecode{bytes});
    const auto back = reserialize(seq);
    ASSERT_GE(back.size(), bytes.size());
    ASSERT_TRUE(std::equal(bytes.begin(), bytes.end(), back.begin()));
    const std::size_t pad = back.size() - bytes.size();
    for (std::size_t i = bytes.size(); i < back.size(); ++i) ASSERT_EQ(back[i], 0);
    if (pad > 0) {
      ASSERT_FALSE(seq.empty());
      EXPECT_TRUE(seq.back().truncated);
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) EXPECT_FALSE(seq[i].truncated);
    EXPECT_EQ(simplify(seq).categories.size(), seq.size());
  }
}

TEST(Disassembler, JsonLineRoundTrip) {
  const auto seq = simplify(disassemble(Bytecode::from_hex("0x6080604052")), "0xabc");
  const auto line = to_json_line(seq);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(category_sequence_from_json_line(line), seq);
}

#pragma once

// Independent reference implementations shared by the unit and acceptance tests.
// Nothing here calls into the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace oracle {

// ---- disassembler ----

struct ExpectedOp {
  std::string mnemonic;
  std::vector<std::uint8_t> immediate;
  bool truncated = false;
};

struct DisasmCase {
  std::string hex;
  std::vector<ExpectedOp> ops;
  std::vector<std::uint8_t> categories;
};

// Category ids: 0 Arithmetic, 1 ComparisonLogic, 2 Crypto, 3 Environment, 4 Block,
// 5 StackPop, 6 Memory, 7 Storage, 8 Flow, 9 Push, 10 Dup, 11 Swap, 12 Log, 13 System, 14 Invalid.
// Assembled by hand from the EVM opcode table.
inline std::vector<DisasmCase> disasm_cases() {
  auto plain = [](std::initializer_list<const char*> names) {
    std::vector<ExpectedOp> ops;
    for (const char* n : names) ops.push_back({n, {}, false});
    return ops;
  };
  std::vector<DisasmCase> c;
  c.push_back({"0x600160020100",
               {{"PUSH1", {0x01}, false}, {"PUSH1", {0x02}, false}, {"ADD", {}, false}, {"STOP", {}, false}},
               {9, 9, 0, 13}});
  c.push_back({"", {}, {}});
  c.push_back({"0x61ff", {{"PUSH2", {0xff, 0x00}, true}}, {9}});
  c.push_back({"0xfe", plain({"INVALID"}), {14}});
  c.push_back({"0x0c", plain({"UNKNOWN"}), {14}});
  c.push_back({"0x0102030405060708090a0b",
               plain({"ADD", "MUL", "SUB", "DIV", "SDIV", "MOD", "SMOD", "ADDMOD", "MULMOD", "EXP", "SIGNEXTEND"}),
               std::vector<std::uint8_t>(11, 0)});
  c.push_back({"0x101112131415161718191a1b1c1d",
               plain({"LT", "GT", "SLT", "SGT", "EQ", "ISZERO", "AND", "OR", "XOR", "NOT", "BYTE", "SHL", "SHR", "SAR"}),
               std::vector<std::uint8_t>(14, 1)});
  c.push_back({"0x20", plain({"KECCAK256"}), {2}});
  c.push_back({"0x303132333435363738393a3b3c3d3e3f",
               plain({"ADDRESS", "BALANCE", "ORIGIN", "CALLER", "CALLVALUE", "CALLDATALOAD", "CALLDATASIZE",
                      "CALLDATACOPY", "CODESIZE", "CODECOPY", "GASPRICE", "EXTCODESIZE", "EXTCODECOPY",
                      "RETURNDATASIZE", "RETURNDATACOPY", "EXTCODEHASH"}),
               std::vector<std::uint8_t>(16, 3)});
  c.push_back({"0x404142434445464748",
               plain({"BLOCKHASH", "COINBASE", "TIMESTAMP", "NUMBER", "PREVRANDAO", "GASLIMIT", "CHAINID",
                      "SELFBALANCE", "BASEFEE"}),
               std::vector<std::uint8_t>(9, 4)});
  c.push_back({"0x505f", plain({"POP", "PUSH0"}), {5, 5}});
  c.push_back({"0x51525359", plain({"MLOAD", "MSTORE", "MSTORE8", "MSIZE"}), {6, 6, 6, 6}});
  c.push_back({"0x5455", plain({"SLOAD", "SSTORE"}), {7, 7}});
  c.push_back({"0x5657585a5b", plain({"JUMP", "JUMPI", "PC", "GAS", "JUMPDEST"}), {8, 8, 8, 8, 8}});
  c.push_back({"0x80828f909f", plain({"DUP1", "DUP3", "DUP16", "SWAP1", "SWAP16"}), {10, 10, 10, 11, 11}});
  c.push_back({"0xa0a1a2a3a4", plain({"LOG0", "LOG1", "LOG2", "LOG3", "LOG4"}), {12, 12, 12, 12, 12}});
  c.push_back({"0xf0f1f2f3f4f5fafdff",
               plain({"CREATE", "CALL", "CALLCODE", "RETURN", "DELEGATECALL", "CREATE2", "STATICCALL", "REVERT",
                      "SELFDESTRUCT"}),
               std::vector<std::uint8_t>(9, 13)});
  {
    // PUSH32 with only 31 of its 32 immediate bytes present.
    std::string hex = "0x7f";
    std::vector<std::uint8_t> imm;
    for (int i = 1; i <= 31; ++i) {
      static const char* digits = "0123456789abcdef";
      hex += digits[i >> 4];
      hex += digits[i & 15];
      imm.push_back(static_cast<std::uint8_t>(i));
    }
    imm.push_back(0);
    c.push_back({hex, {{"PUSH32", imm, true}}, {9}});
  }
  c.push_back({"0x6080604052",
               {{"PUSH1", {0x80}, false}, {"PUSH1", {0x40}, false}, {"MSTORE", {}, false}},
               {9, 9, 6}});
  c.push_back({"0x210c5c5d5ea5eff6fbfc", plain({"UNKNOWN", "UNKNOWN", "UNKNOWN", "UNKNOWN", "UNKNOWN", "UNKNOWN",
                                                "UNKNOWN", "UNKNOWN", "UNKNOWN", "UNKNOWN"}),
               std::vector<std::uint8_t>(10, 14)});
  c.push_back({"0X61ABCD3380fe",
               {{"PUSH2", {0xab, 0xcd}, false}, {"CALLER", {}, false}, {"DUP1", {}, false}, {"INVALID", {}, false}},
               {9, 3, 10, 14}});
  return c;
}

// ---- losses ----

inline double direct_mse(std::span<const double> x, std::span<const double> y) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double d = static_cast<long double>(x[i]) - static_cast<long double>(y[i]);
    s += d * d;
  }
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

// ---- oversampling ----

inline double distance_to_segment(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    ab2 += (b[j] - a[j]) * (b[j] - a[j]);
    ap_ab += (p[j] - a[j]) * (b[j] - a[j]);
  }
  const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double q = a[j] + t * (b[j] - a[j]);
    d2 += (p[j] - q) * (p[j] - q);
  }
  return std::sqrt(d2);
}

// Brute-force k nearest neighbours of point i among `rows` (excluding i), ties by lower index.
inline std::vector<std::size_t> brute_knn(const std::vector<std::vector<double>>& rows, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (j == i) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < rows[i].size(); ++c) s += (rows[i][c] - rows[j][c]) * (rows[i][c] - rows[j][c]);
    d.emplace_back(s, j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < k && q < d.size(); ++q) out.push_back(d[q].second);
  return out;
}

// ---- boosting ----

struct BruteSplit {
  int feature = -1;
  std::vector<bool> goes_left;  // per row
  double gain = 0.0;
  // Other splits whose gain is within a relative 1e-9 of the best (ambiguous ties).
  std::vector<std::pair<int, std::vector<bool>>> near_ties;
};

// Depth-1 split on logistic loss from the prior log-odds, scanning every threshold between
// consecutive distinct values of every feature and summing gradients row by row.
inline BruteSplit brute_force_stump(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double alpha,
                                    double lambda, std::size_t min_leaf) {
  const std::size_t n = y.size();
  double pos = 0;
  for (int v : y) pos += v;
  const double p = pos / static_cast<double>(n);
  auto shrink = [&](double g) { return g > alpha ? g - alpha : (g < -alpha ? g + alpha : 0.0); };
  auto score = [&](double g, double h) {
    const double t = shrink(g);
    return t * t / (h + lambda);
  };
  double gt = 0, ht = 0;
  for (std::size_t i = 0; i < n; ++i) {
    gt += p - y[i];
    ht += p * (1 - p);
  }
  struct Cand {
    int f;
    std::vector<bool> left;
    double gain;
  };
  std::vector<Cand> cands;
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    std::vector<double> vals;
    for (const auto& r : x) vals.push_back(r[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
      const double thr = vals[v];  // x <= vals[v] goes left
      double gl = 0, hl = 0;
      std::size_t nl = 0;
      std::vector<bool> left(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i][f] <= thr) {
          left[i] = true;
          gl += p - y[i];
          hl += p * (1 - p);
          ++nl;
        }
      }
      if (nl < min_leaf || n - nl < min_leaf) continue;
      cands.push_back({static_cast<int>(f), left, score(gl, hl) + score(gt - gl, ht - hl) - score(gt, ht)});
    }
  }
  BruteSplit best;
  double best_gain = 0.0;
  for (const auto& c : cands) {
    if (c.gain > best_gain) {
      best_gain = c.gain;
      best.feature = c.f;
      best.goes_left = c.left;
      best.gain = c.gain;
    }
  }
  if (best.feature >= 0) {
    for (const auto& c : cands) {
      if (std::abs(c.gain - best_gain) <= 1e-9 * std::max(1.0, best_gain)) best.near_ties.emplace_back(c.f, c.left);
    }
  }
  return best;
}

// ---- thresholds ----

// Linear interpolation between closest ranks: rank = p/100 * (n - 1) on sorted data.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (rank - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace oracle

#include "repute/pipeline/fixture_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "repute/common/error.hpp"
#include "repute/evm/disassembler.hpp"
#include "repute/ingest/fixture.hpp"

namespace repute::pipeline {
namespace {

using Rng = std::mt19937_64;
using Weights = std::array<double, evm::kCategoryCount>;

// Category order: Arithmetic, ComparisonLogic, Crypto, Environment, Block, StackPop, Memory,
// Storage, Flow, Push, Dup, Swap, Log, System, Invalid.
constexpr Weights kReputableProfile = {0.22, 0.06, 0.01, 0.03, 0.01, 0.03, 0.18, 0.02,
                                       0.18, 0.14, 0.05, 0.05, 0.01, 0.01, 0.0};
constexpr Weights kIllicitProfile = {0.04, 0.04, 0.02, 0.10, 0.03, 0.03, 0.04, 0.22,
                                     0.05, 0.14, 0.03, 0.03, 0.01, 0.21, 0.01};

constexpr unsigned __int128 kGwei = 1'000'000'000;

std::string random_address(Rng& rng) {
  std::string a = "0x";
  for (int i = 0; i < 5; ++i) a += fmt::format("{:08x}", static_cast<std::uint32_t>(rng()));
  return a;
}

const std::array<std::vector<std::uint8_t>, evm::kCategoryCount>& opcodes_by_category() {
  static const auto table = [] {
    std::array<std::vector<std::uint8_t>, evm::kCategoryCount> t;
    for (int b = 0; b < 256; ++b) {
      const auto byte = static_cast<std::uint8_t>(b);
      if (evm::mnemonic(byte) == "UNKNOWN") continue;
      t[static_cast<std::size_t>(evm::category_of(byte))].push_back(byte);
    }
    return t;
  }();
  return table;
}

evm::Bytecode make_bytecode(Rng& rng, const Weights& profile, std::size_t n_ops) {
  Weights w = profile;
  std::uniform_real_distribution<double> jitter(0.6, 1.4);
  for (auto& v : w) v *= jitter(rng);
  std::discrete_distribution<std::size_t> pick_category(w.begin(), w.end());
  const auto& ops = opcodes_by_category();
  evm::Bytecode code;
  for (std::size_t i = 0; i < n_ops; ++i) {
    const auto& choices = ops[pick_category(rng)];
    const std::uint8_t op = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
    code.bytes.push_back(op);
    for (std::size_t k = 0; k < evm::immediate_size(op); ++k) code.bytes.push_back(static_cast<std::uint8_t>(rng()));
  }
  code.bytes.push_back(0x00);
  return code;
}

Weights blend(double separation) {
  Weights w{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = separation * kIllicitProfile[i] + (1.0 - separation) * kReputableProfile[i];
  }
  return w;
}

ingest::Wei wei_from_gwei(double gwei) {
  return ingest::Wei(static_cast<unsigned __int128>(std::max(0.0, std::round(gwei))) * kGwei);
}

struct TxShape {
  double value_eth_lo, value_eth_hi;
  double gas_mean, gas_sd;
  double price_gwei_mean, price_gwei_sd;
  double error_rate;
};

ingest::TxRecord make_tx(Rng& rng, std::int64_t hour_start, const std::string& from, const std::string& to,
                         const TxShape& s, bool internal) {
  ingest::TxRecord tx;
  tx.timestamp = hour_start + std::uniform_int_distribution<std::int64_t>(0, 3599)(rng);
  tx.block_number = 10'000'000 + tx.timestamp / 12;
  tx.from_addr = from;
  tx.to_addr = to;
  tx.value = wei_from_gwei(std::uniform_real_distribution<double>(s.value_eth_lo, s.value_eth_hi)(rng) * 1e9);
  tx.gas_used = static_cast<std::int64_t>(std::max(21000.0, std::normal_distribution<double>(s.gas_mean, s.gas_sd)(rng)));
  tx.gas_price = internal ? ingest::Wei() : wei_from_gwei(std::max(1.0, std::normal_distribution<double>(
                                                                            s.price_gwei_mean, s.price_gwei_sd)(rng)));
  tx.is_error = !internal && std::bernoulli_distribution(s.error_rate)(rng);
  tx.is_internal = internal;
  return tx;
}

std::size_t poisson(Rng& rng, double mean) {
  return mean <= 0.0 ? 0 : static_cast<std::size_t>(std::poisson_distribution<long>(mean)(rng));
}

void sort_by_time(std::vector<ingest::TxRecord>& txs) {
  std::stable_sort(txs.begin(), txs.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
}

ingest::ContractRecord make_reputable(Rng& rng, const FixtureParams& p) {
  ingest::ContractRecord c;
  c.address = random_address(rng);
  c.label = ingest::Label::Reputable;
  c.bytecode = make_bytecode(
      rng, kReputableProfile, std::uniform_int_distribution<std::size_t>(p.opcodes_min, p.opcodes_max)(rng));

  const auto hours = std::uniform_int_distribution<std::size_t>(p.reputable_hours_min, p.reputable_hours_max)(rng);
  const double base = std::uniform_real_distribution<double>(8.0, 20.0)(rng);
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  std::vector<std::string> pool(std::uniform_int_distribution<std::size_t>(20, 60)(rng));
  for (auto& a : pool) a = random_address(rng);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const TxShape normal{0.01, 2.0, 60000, 8000, 30, 3, 0.05};
  const TxShape internal{0.001, 0.5, 20000, 3000, 0, 0, 0.0};
  const std::int64_t t0 =
      p.start_time / 3600 * 3600 + std::uniform_int_distribution<std::int64_t>(0, 500)(rng) * 3600;

  for (std::size_t h = 0; h < hours; ++h) {
    const std::int64_t hs = t0 + static_cast<std::int64_t>(h) * 3600;
    const double lambda = base * (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * static_cast<double>(h) / 24.0 + phase));
    const std::size_t n = std::max<std::size_t>(1, poisson(rng, lambda));
    for (std::size_t i = 0; i < n; ++i) c.transactions.push_back(make_tx(rng, hs, pool[pick(rng)], c.address, normal, false));
    const std::size_t ni = poisson(rng, 0.2 * lambda);
    for (std::size_t i = 0; i < ni; ++i) {
      c.internal_transactions.push_back(make_tx(rng, hs, c.address, pool[pick(rng)], internal, true));
    }
  }
  sort_by_time(c.transactions);
  sort_by_time(c.internal_transactions);
  return c;
}

ingest::ContractRecord make_illicit(Rng& rng, const FixtureParams& p) {
  ingest::ContractRecord c;
  c.address = random_address(rng);
  c.label = ingest::Label::Illicit;
  c.bytecode = make_bytecode(rng, blend(p.code_separation),
                             std::uniform_int_distribution<std::size_t>(p.opcodes_min, p.opcodes_max)(rng));

  const auto hours = std::uniform_int_distribution<std::size_t>(p.illicit_hours_min, p.illicit_hours_max)(rng);
  const double base = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
  std::vector<std::size_t> counts(hours);
  for (auto& n : counts) n = std::bernoulli_distribution(0.5)(rng) ? poisson(rng, base) : 0;
  counts.front() = std::max<std::size_t>(counts.front(), 1);
  counts.back() = std::max<std::size_t>(counts.back(), 1);

  // Bursts sit well above 5x the contract's median hourly count.
  std::vector<std::size_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t median = sorted[sorted.size() / 2];
  std::vector<bool> burst(hours, false);
  const auto n_bursts = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  for (std::size_t b = 0; b < n_bursts; ++b) {
    const auto h = std::uniform_int_distribution<std::size_t>(0, hours - 1)(rng);
    burst[h] = true;
    counts[h] = 5 * median + std::uniform_int_distribution<std::size_t>(20, 60)(rng);
  }

  std::vector<std::string> pool(std::uniform_int_distribution<std::size_t>(5, 15)(rng));
  for (auto& a : pool) a = random_address(rng);
  std::vector<std::string> sinks(std::uniform_int_distribution<std::size_t>(1, 3)(rng));
  for (auto& a : sinks) a = random_address(rng);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_sink(0, sinks.size() - 1);
  const TxShape quiet{0.01, 1.0, 120000, 40000, 60, 20, 0.4};
  const TxShape spike{1.0, 20.0, 120000, 40000, 90, 25, 0.4};
  const TxShape drain{1.0, 30.0, 30000, 5000, 0, 0, 0.0};
  const std::int64_t t0 =
      p.start_time / 3600 * 3600 + std::uniform_int_distribution<std::int64_t>(0, 500)(rng) * 3600;

  for (std::size_t h = 0; h < hours; ++h) {
    const std::int64_t hs = t0 + static_cast<std::int64_t>(h) * 3600;
    for (std::size_t i = 0; i < counts[h]; ++i) {
      // Burst traffic comes from fresh addresses (many distinct victims).
      const std::string from = burst[h] ? random_address(rng) : pool[pick(rng)];
      c.transactions.push_back(make_tx(rng, hs, from, c.address, burst[h] ? spike : quiet, false));
    }
    if (burst[h]) {
      const std::size_t ni = poisson(rng, 0.5 * static_cast<double>(counts[h]));
      for (std::size_t i = 0; i < ni; ++i) {
        c.internal_transactions.push_back(make_tx(rng, hs, c.address, sinks[pick_sink(rng)], drain, true));
      }
    }
  }
  sort_by_time(c.transactions);
  sort_by_time(c.internal_transactions);
  return c;
}

}  // namespace

void FixtureParams::validate() const {
  if (n_reputable < 1) throw ConfigError("fixture.n_reputable", "must be >= 1");
  if (n_illicit < 1) throw ConfigError("fixture.n_illicit", "must be >= 1");
  if (reputable_hours_min < 1 || reputable_hours_min > reputable_hours_max) {
    throw ConfigError("fixture.reputable_hours_min", "must be in [1, reputable_hours_max]");
  }
  if (illicit_hours_min < 2 || illicit_hours_min > illicit_hours_max) {
    throw ConfigError("fixture.illicit_hours_min", "must be in [2, illicit_hours_max]");
  }
  if (!(code_separation >= 0.0 && code_separation <= 1.0)) {
    throw ConfigError("fixture.code_separation", "must be in [0, 1]");
  }
  if (opcodes_min < 1 || opcodes_min > opcodes_max) throw ConfigError("fixture.opcodes_min", "must be in [1, opcodes_max]");
}

nlohmann::ordered_json FixtureParams::to_json() const {
  return {{"n_reputable", n_reputable},
          {"n_illicit", n_illicit},
          {"seed", seed},
          {"reputable_hours_min", reputable_hours_min},
          {"reputable_hours_max", reputable_hours_max},
          {"illicit_hours_min", illicit_hours_min},
          {"illicit_hours_max", illicit_hours_max},
          {"code_separation", code_separation},
          {"opcodes_min", opcodes_min},
          {"opcodes_max", opcodes_max},
          {"start_time", start_time}};
}

FixtureParams FixtureParams::from_json(const nlohmann::json& j) {
  FixtureParams p;
  p.n_reputable = j.value("n_reputable", p.n_reputable);
  p.n_illicit = j.value("n_illicit", p.n_illicit);
  p.seed = j.value("seed", p.seed);
  p.reputable_hours_min = j.value("reputable_hours_min", p.reputable_hours_min);
  p.reputable_hours_max = j.value("reputable_hours_max", p.reputable_hours_max);
  p.illicit_hours_min = j.value("illicit_hours_min", p.illicit_hours_min);
  p.illicit_hours_max = j.value("illicit_hours_max", p.illicit_hours_max);
  p.code_separation = j.value("code_separation", p.code_separation);
  p.opcodes_min = j.value("opcodes_min", p.opcodes_min);
  p.opcodes_max = j.value("opcodes_max", p.opcodes_max);
  p.start_time = j.value("start_time", p.start_time);
  return p;
}

std::vector<ingest::ContractRecord> make_fixture(const FixtureParams& params) {
  params.validate();
  Rng rng(params.seed);
  std::vector<ingest::ContractRecord> out;
  out.reserve(params.n_reputable + params.n_illicit);
  for (std::size_t i = 0; i < params.n_reputable; ++i) out.push_back(make_reputable(rng, params));
  for (std::size_t i = 0; i < params.n_illicit; ++i) out.push_back(make_illicit(rng, params));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.address < b.address; });
  return out;
}

void write_fixture(const std::filesystem::path& dir, const std::vector<ingest::ContractRecord>& contracts,
                   const FixtureParams& params) {
  ingest::write_fixture_dir(dir, contracts);
  nlohmann::ordered_json manifest;
  manifest["generator"] = "repute synthetic fixture";
  manifest["params"] = params.to_json();
  manifest["contracts"] = contracts.size();
  std::ofstream out(dir / "fixture_manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "fixture_manifest.json").string());
  out << manifest.dump(2) << "\n";
}

}  // namespace repute::pipeline

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "repute/ingest/records.hpp"

namespace repute::pipeline {

/// Knobs for the small synthetic dataset.
///
/// Reputable contracts get steady, daily-periodic traffic (every hour active, ~5% failed
/// calls) and bytecode dominated by arithmetic, memory and control flow. Illicit contracts
/// get sparse traffic with injected bursts (at least one hour above 5x the contract's own
/// median tx count), ~40% failed calls, shorter histories, and bytecode skewed toward
/// system calls and storage. `code_separation` blends the illicit opcode profile toward
/// the reputable one: 1 keeps them fully distinct, 0 makes them identical.
struct FixtureParams {
  std::size_t n_reputable = 40;
  std::size_t n_illicit = 10;
  std::uint64_t seed = 7;
  std::size_t reputable_hours_min = 48;
  std::size_t reputable_hours_max = 96;
  std::size_t illicit_hours_min = 24;
  std::size_t illicit_hours_max = 60;
  double code_separation = 1.0;
  std::size_t opcodes_min = 200;
  std::size_t opcodes_max = 600;
  std::int64_t start_time = 1'600'000'000;

  /// Throws ConfigError naming the field.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static FixtureParams from_json(const nlohmann::json& j);
};

/// Contracts sorted by address, labels set.
std::vector<ingest::ContractRecord> make_fixture(const FixtureParams& params);

/// Fixture directory (one JSON per contract plus labels.csv) and fixture_manifest.json
/// recording the generator parameters.
void write_fixture(const std::filesystem::path& dir, const std::vector<ingest::ContractRecord>& contracts,
                   const FixtureParams& params);

}  // namespace repute::pipeline

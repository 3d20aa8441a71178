#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repute/augment/augmentation.hpp"
#include "repute/common/matrix.hpp"
#include "repute/ingest/records.hpp"
#include "repute/pipeline/config.hpp"

namespace repute::pipeline {

/// Stage names in run-all order.
const std::vector<std::string>& stage_order();

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Per label, a seeded shuffle of the sorted addresses sends round(fraction * n) to test
/// (at least one when the label has two or more contracts). Unlabelled contracts are left out.
Split stratified_split(const std::vector<ingest::ContractRecord>& contracts, double test_fraction, std::uint64_t seed);

/// Synthetic minority rows for one oversampler, grown to the settings' target (the
/// majority count when target_count is 0). Small minorities shrink k and the GAN batch to fit.
Matrix synthesize(const Matrix& minority, const Matrix& majority, augment::Method method,
                  const AugmentSettings& settings, std::uint64_t seed);

/// Training set with synthetic illicit rows (label 1) appended; unchanged for "none".
std::pair<Matrix, std::vector<int>> augment_training_set(const Matrix& x, const std::vector<int>& y,
                                                         const std::optional<augment::Method>& method,
                                                         const AugmentSettings& settings, std::uint64_t seed);

/// Manifest-tracked stage runner. Each stage writes under out/<stage>/ and records the
/// config hash, seed, and SHA-256 of its inputs and outputs in out/<stage>/manifest.json.
/// A stage whose manifest matches the current config and inputs is skipped unless forced.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::filesystem::path out, bool force = false);

  /// Returns false when the stage was already up to date. Throws MissingArtifactError
  /// naming the first absent prerequisite.
  bool run(std::string_view stage);
  void run_all();

  const PipelineConfig& config() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }

 private:
  struct StageSpec;
  StageSpec spec(std::string_view stage) const;

  void ingest();
  void disasm();
  void embed();
  void augment();
  void train_gbdt();
  void tx_features();
  void train_cae();
  void score();
  void evaluate();
  void sweep();

  PipelineConfig cfg_;
  std::filesystem::path out_;
  bool force_;
  std::string hash_;
};

}  // namespace repute::pipeline

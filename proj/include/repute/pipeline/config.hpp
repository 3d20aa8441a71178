#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repute/augment/augmentation.hpp"
#include "repute/cae/autoencoder.hpp"
#include "repute/embed/embeddings.hpp"
#include "repute/features/tx_features.hpp"
#include "repute/gbdt/gbdt.hpp"

namespace repute::pipeline {

/// Either a local fixture directory or a list of addresses fetched from Etherscan.
struct DatasetConfig {
  std::filesystem::path fixture_dir;
  std::vector<std::string> fetch_addresses;
  std::filesystem::path labels_csv;
  std::string etherscan_base_url = "https://api.etherscan.io/api";
  double requests_per_second = 5.0;
};

/// Oversampling settings. `method` may be "none".
struct AugmentSettings {
  std::optional<augment::Method> method = augment::Method::GAN;
  std::size_t target_count = 0;  // 0: match the majority count
  std::size_t k_neighbors = 5;
  augment::GanParams gan;
};

struct GbdtSettings {
  std::size_t folds = 5;
  gbdt::GridSpec grid;
  /// Oversamplers compared on the held-out split with the selected hyperparameters.
  std::vector<std::optional<augment::Method>> compare = {std::nullopt, augment::Method::SMOTE,
                                                         augment::Method::ADASYN, augment::Method::GAN};
};

struct FeatureSettings {
  std::size_t window = 24;
  std::size_t stride = 1;
  double outlier_k = 3.0;
  features::OutlierMode outlier_mode = features::OutlierMode::Global;
};

struct ThresholdSettings {
  std::vector<double> percentiles = {75.0, 80.0, 85.0, 90.0};
  double primary = 90.0;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  DatasetConfig dataset;
  double test_fraction = 0.25;
  embed::EmbeddingConfig embedding;
  AugmentSettings augmentation;
  GbdtSettings gbdt;
  FeatureSettings features;
  cae::CaeConfig cae;
  std::vector<cae::Variant> cae_variants = {cae::Variant::TransactionOnly, cae::Variant::Multimodal};
  ThresholdSettings thresholds;

  /// Parses and validates; throws ConfigError naming the field path (e.g. "cae.epochs").
  /// `seed_override` replaces (or supplies) the mandatory seed.
  static PipelineConfig from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override = {});
  static PipelineConfig load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

  /// Effective configuration with defaults filled in, excluding output_dir.
  nlohmann::ordered_json to_json() const;
  /// SHA-256 of to_json().dump().
  std::string hash() const;

  /// Per-purpose seeds derived from `seed`.
  std::uint64_t split_seed() const { return seed; }
  std::uint64_t embedding_seed() const { return seed + 1; }
  std::uint64_t augment_seed() const { return seed + 2; }
  std::uint64_t gbdt_seed() const { return seed + 3; }
  std::uint64_t cae_seed() const { return seed + 4; }
};

std::string method_label(const std::optional<augment::Method>& m);

}  // namespace repute::pipeline

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repute/common/matrix.hpp"
#include "repute/features/tx_features.hpp"
#include "repute/ingest/records.hpp"
#include "repute/nn/gradient_check.hpp"
#include "repute/nn/network.hpp"

namespace repute::cae {

enum class Variant { TransactionOnly, Multimodal };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

struct CaeConfig {
  std::size_t window = 24;
  std::size_t features = features::kFeatureCount;
  Variant variant = Variant::TransactionOnly;
  std::size_t embedding_dim = 50;
  std::size_t projection_width = 8;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 8;
  std::size_t bottleneck = 8;
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  /// Channels seen by the autoencoder: F, plus the projection width when multimodal.
  std::size_t channels() const;
  /// Throws ConfigError; the window must be a positive multiple of 4 (two stride-2 stages).
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static CaeConfig from_json(const nlohmann::json& j);
};

/// Contract address -> D-dimensional embedding.
using EmbeddingLookup = std::map<std::string, std::vector<double>, std::less<>>;

/// Throws Error naming the address when it has no embedding.
const std::vector<double>& embedding_for(const EmbeddingLookup& lookup, std::string_view address);

/// Encoder: Conv1D(C->16,k3,s2,p1) ReLU Conv1D(16->8,k3,s2,p1) ReLU Flatten Dense(->8).
/// Decoder: Dense ReLU Reshape Upsample1D(2) Conv1D(8->16,k3,p1) ReLU Upsample1D(2) Conv1D(16->C,k3,p1).
nn::Network make_autoencoder(const CaeConfig& cfg);
/// Index of the bottleneck Dense layer in make_autoencoder's output.
inline constexpr std::size_t kBottleneckLayer = 5;

/// Tiles `projected` (E') across every row of `window` (W x F) and concatenates
/// channel-wise, giving a [W, F + E'] tensor.
nn::Tensor fuse(const Matrix& window, std::span<const double> projected);

class AutoencoderModel {
 public:
  /// Fresh model initialised from cfg.seed (projection from cfg.seed + 1).
  explicit AutoencoderModel(const CaeConfig& cfg);
  AutoencoderModel(CaeConfig cfg, nn::Network autoencoder, std::optional<nn::Network> projection);

  const CaeConfig& config() const { return cfg_; }
  nn::Network& autoencoder() { return ae_; }
  const nn::Network& autoencoder() const { return ae_; }
  /// Dense(D -> E'); present only for the multimodal variant.
  nn::Network& projection() { return *projection_; }
  const nn::Network& projection() const { return *projection_; }
  bool multimodal() const { return projection_.has_value(); }

  /// Autoencoder input for one window. `embedding` is ignored for transaction-only
  /// models and required (length D) for multimodal ones.
  nn::Tensor prepare(const Matrix& window, std::span<const double> embedding = {}) const;
  /// Mean squared error between the prepared input and its reconstruction.
  double reconstruction_error(const Matrix& window, std::span<const double> embedding = {}) const;
  /// Bottleneck activations.
  std::vector<double> latent(const Matrix& window, std::span<const double> embedding = {}) const;

  std::vector<nn::Param*> params();

  /// Writes `path`, plus `path` + ".projection" for multimodal models.
  void save(const std::filesystem::path& path) const;
  static AutoencoderModel load(const std::filesystem::path& path);

 private:
  CaeConfig cfg_;
  nn::Network ae_;
  std::optional<nn::Network> projection_;
};

/// Loss and gradient for one window, through the projection when multimodal. The
/// reconstruction target is the fused tensor, so gradients flow into the projection via
/// both the input and the target. Gradients are scaled by `scale` and accumulated.
double accumulate_window_gradients(AutoencoderModel& model, const Matrix& window, std::span<const double> embedding,
                                   double scale = 1.0);

/// Objective over all model parameters for a fixed set of windows (for gradient checks).
nn::Objective window_objective(AutoencoderModel& model, const std::vector<Matrix>& windows,
                               const std::vector<std::vector<double>>& embeddings);

struct CaeTrainingResult {
  AutoencoderModel model;
  std::vector<double> epoch_loss;       // mean per-window MSE seen during each epoch
  std::vector<double> training_errors;  // final reconstruction error per training window
};

/// Adam over shuffled mini-batches. `labels` gives the label of each window; any
/// Illicit window is rejected with an Error naming its contract.
CaeTrainingResult train_cae(const std::vector<features::WindowTensor>& windows, std::span<const ingest::Label> labels,
                            const EmbeddingLookup& embeddings, const CaeConfig& cfg);

namespace serial {
std::vector<double> score_windows(const AutoencoderModel& model, const std::vector<features::WindowTensor>& windows,
                                  const EmbeddingLookup& embeddings);
}
namespace omp {
/// Same values as the serial version; windows are scored concurrently.
std::vector<double> score_windows(const AutoencoderModel& model, const std::vector<features::WindowTensor>& windows,
                                  const EmbeddingLookup& embeddings);
}

// ---- thresholds and verdicts ----

inline constexpr double kIllicitRatio = 0.30;

struct AnomalyThreshold {
  double percentile = 90.0;
  double cutoff = 0.0;
  std::string provenance;  // identifies the training-error distribution
};

/// Linear-interpolation percentile: rank = p/100 * (n-1). Throws ConfigError when p is
/// outside [75, 90] and Error on empty input.
AnomalyThreshold fit_threshold(std::span<const double> training_errors, double p, std::string provenance = {});

struct AnomalyReport {
  std::string contract_address;
  std::vector<double> errors;
  AnomalyThreshold threshold;
  std::size_t anomalous = 0;
  double anomaly_ratio = 0.0;
  ingest::Label verdict = ingest::Label::Reputable;

  nlohmann::ordered_json to_json() const;
  static AnomalyReport from_json(const nlohmann::json& j);
};

/// A window is anomalous iff error > cutoff; Illicit iff the anomalous fraction > 0.30.
/// Throws Error on zero windows.
AnomalyReport classify_contract(std::string_view address, std::vector<double> errors,
                                const AnomalyThreshold& threshold);

/// Groups per-window errors by contract (in first-appearance order) and classifies each.
std::vector<AnomalyReport> classify_contracts(const std::vector<features::WindowTensor>& windows,
                                              std::span<const double> errors, const AnomalyThreshold& threshold);

// ---- latent export ----

struct LatentExport {
  std::vector<std::string> window_addresses;
  Matrix window_latents;  // N x bottleneck
  std::vector<std::string> contract_addresses;
  Matrix contract_latents;  // mean over each contract's windows
};

LatentExport export_latents(const AutoencoderModel& model, const std::vector<features::WindowTensor>& windows,
                            const EmbeddingLookup& embeddings);

struct Projection2D {
  Matrix points;                  // N x 2
  std::vector<double> variances;  // per component, population variance
  Matrix components;              // 2 x dim, unit rows
};

/// Principal components of the centred rows; each component's largest-magnitude loading
/// is made positive (first such index on ties).
Projection2D pca_2d(const Matrix& x);

/// "address,v0,...,v{k-1}" rows.
std::string matrix_csv(const std::vector<std::string>& addresses, const Matrix& m, std::string_view prefix);

}  // namespace repute::cae

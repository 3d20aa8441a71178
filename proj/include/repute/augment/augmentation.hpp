#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repute/common/error.hpp"
#include "repute/common/matrix.hpp"
#include "repute/nn/network.hpp"

namespace repute::augment {

enum class Method { SMOTE, ADASYN, GAN };

std::string_view method_name(Method m);
Method parse_method(std::string_view s);

struct GanParams {
  std::size_t noise_dim = 16;
  std::vector<std::size_t> generator_hidden = {64, 64};
  std::vector<std::size_t> discriminator_hidden = {64, 64};
  double learning_rate = 2e-4;
  std::size_t epochs = 2000;
  std::size_t batch_size = 32;
  /// Halt when the discriminator loss stays below `collapse_loss` for this many steps.
  std::size_t collapse_patience = 100;
  double collapse_loss = 1e-4;
};

struct AugmentationConfig {
  Method method = Method::GAN;
  /// Minority size after augmentation.
  std::size_t target_count = 0;
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
  GanParams gan;
};

/// Where an interpolated sample came from: base + lambda * (neighbour - base).
struct Interpolation {
  std::size_t base = 0;
  std::size_t neighbour = 0;
  double lambda = 0.0;
};

struct Synthesis {
  Matrix samples;
  std::vector<Interpolation> origins;  // empty for GAN output
};

/// target_count - minority.rows() interpolated samples. Throws Error when the minority
/// has no more than k_neighbors rows or target_count is below the current count.
Synthesis smote(const Matrix& minority, const AugmentationConfig& cfg);

/// Boundary weights r_i = (#majority among the k nearest neighbours of minority row i in
/// the combined set) / k.
std::vector<double> adasyn_weights(const Matrix& minority, const Matrix& majority, std::size_t k);

/// Splits `total` proportionally to `weights` with largest-remainder rounding
/// (ties to the lower index). Sum of the result is exactly `total`.
std::vector<std::size_t> allocate_largest_remainder(const std::vector<double>& weights, std::size_t total);

/// Like SMOTE, but generation per minority row is proportional to its boundary weight.
/// Falls back to uniform weights (with a warning) when every weight is zero.
Synthesis adasyn(const Matrix& minority, const Matrix& majority, const AugmentationConfig& cfg);

/// Trained generator plus the per-dimension affine map back to embedding space.
struct Generator {
  nn::Network network;
  std::size_t noise_dim = 0;
  std::vector<double> mean;
  std::vector<double> scale;

  /// n x D samples from standard-normal noise drawn with `seed`.
  Matrix sample(std::size_t n, std::uint64_t seed) const;

  void save(const std::filesystem::path& path) const;
  static Generator load(const std::filesystem::path& path);
};

class GanDivergedError : public Error {
 public:
  using Error::Error;
};

struct GanTrainingResult {
  Generator generator;
  nn::Network discriminator;
  std::vector<double> discriminator_loss;  // per step
  std::vector<double> generator_loss;      // per step
};

nn::Network make_generator(std::size_t noise_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim);
/// Ends in Sigmoid: output is P(real).
nn::Network make_discriminator(std::size_t in_dim, const std::vector<std::size_t>& hidden);

/// Non-saturating GAN: per mini-batch one discriminator step on real+fake, then one
/// generator step maximizing log D(G(z)). Data is z-scored per dimension before training.
/// Throws Error if minority has fewer rows than the batch size, GanDivergedError on collapse.
GanTrainingResult train_gan(const Matrix& minority, const AugmentationConfig& cfg);

/// Distribution similarity between real and synthetic rows.
/// correlation_coefficient: Pearson correlation of the per-dimension mean vectors.
/// variance_ratio: mean over dimensions of var(synthetic_d) / var(real_d), skipping
/// dimensions where the real variance is zero.
struct QualityReport {
  double correlation_coefficient = 0.0;
  double variance_ratio = 0.0;

  nlohmann::ordered_json to_json() const;
};

QualityReport quality_metrics(const Matrix& real, const Matrix& synthetic);

/// "provenance,e0,...": real rows tagged "real", synthetic rows tagged with the method.
std::string provenance_csv(const Matrix& real, const Matrix& synthetic, Method method);

}  // namespace repute::augment

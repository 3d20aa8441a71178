#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repute/common/matrix.hpp"
#include "repute/kernels/histogram.hpp"

namespace repute::gbdt {

struct GbdtHyperparams {
  double learning_rate = 0.1;
  std::size_t max_depth = 5;
  double subsample = 0.5;
  double reg_alpha = 0.1;
  double reg_lambda = 0.01;
  std::size_t n_estimators = 300;
  std::size_t min_samples_leaf = 1;
  std::size_t n_bins = 64;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static GbdtHyperparams from_json(const nlohmann::json& j);

  friend bool operator==(const GbdtHyperparams&, const GbdtHyperparams&) = default;
};

/// Leaf when feature < 0. Rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
  std::size_t depth() const;
};

struct BoostedModel {
  double base_score = 0.0;  // prior log-odds
  std::vector<Tree> trees;
  GbdtHyperparams hyperparams;
  std::size_t n_features = 0;
  std::vector<double> train_log_loss;  // after each round; [0] is the prior-only model

  /// base_score + lr * sum of the first `n_trees` trees (all when nullopt).
  double margin(std::span<const double> row, std::optional<std::size_t> n_trees = std::nullopt) const;

  nlohmann::ordered_json to_json() const;
  static BoostedModel from_json(const nlohmann::json& j);
};

/// Per-feature cut points: midpoints between adjacent distinct values, thinned to at most
/// n_bins - 1 quantile-chosen cuts. A value goes to the first bin whose cut is >= it.
struct BinMapper {
  std::vector<std::vector<double>> cuts;

  static BinMapper fit(const Matrix& x, std::size_t n_bins);
  kernels::BinnedMatrix transform(const Matrix& x) const;
};

/// Second-order boosting on logistic loss with histogram splits.
/// Throws Error on a single-class y, non-finite features, or N < 2.
BoostedModel fit(const Matrix& x, std::span<const int> y, const GbdtHyperparams& hp);

/// P(y = 1) per row. Throws ShapeError when the feature count differs from training.
std::vector<double> predict_proba(const BoostedModel& model, const Matrix& x,
                                  std::optional<std::size_t> n_trees = std::nullopt);

/// -mean(y ln p + (1-y) ln(1-p)) with p clipped to [1e-15, 1-1e-15].
double log_loss(std::span<const int> y, std::span<const double> p);

// ---- split search (exposed for oracle tests) ----

struct SplitCandidate {
  int feature = -1;
  std::size_t bin = 0;  // rows with bin <= this go left
  double gain = 0.0;
};

/// L1 soft-threshold of a gradient sum.
double soft_threshold(double g, double alpha);
/// T(G)^2 / (H + lambda).
double split_score(double g, double h, double alpha, double lambda);
/// Gains within this relative margin of the incumbent count as ties and keep the
/// earlier (feature, bin).
inline constexpr double kGainTieTolerance = 1e-12;
bool improves(double gain, double best);

/// Best split over histograms; feature < 0 when nothing has gain > 0.
SplitCandidate best_split(const std::vector<kernels::FeatureHistogram>& hist, double alpha, double lambda,
                          std::size_t min_samples_leaf);

// ---- cross-validated grid search ----

struct GridSpec {
  std::vector<double> learning_rates = {0.2, 0.1, 0.01};
  std::vector<std::size_t> max_depths = {2, 3, 4, 5, 6, 7, 8};
  std::vector<std::size_t> n_estimators = {100, 200, 300};
  std::vector<double> subsamples = {0.5};
  std::vector<double> reg_alphas = {0.1};
  std::vector<double> reg_lambdas = {0.01};
  GbdtHyperparams base;  // min_samples_leaf, n_bins, seed

  std::vector<GbdtHyperparams> expand() const;
  nlohmann::ordered_json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

/// Optional per-fold training-set transform (e.g. oversampling). Receives the training
/// fold only and the fold index; validation folds are never passed through it.
using FoldAugmenter =
    std::function<std::pair<Matrix, std::vector<int>>(const Matrix& x, const std::vector<int>& y, std::size_t fold)>;

struct CvRow {
  GbdtHyperparams hp;
  std::vector<double> fold_log_loss;
  std::vector<double> fold_accuracy;
  double mean_log_loss = 0.0;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  std::vector<CvRow> rows;
  std::size_t best_index = 0;
  std::vector<std::size_t> fold_of;  // fold id per input row

  const GbdtHyperparams& best() const { return rows.at(best_index).hp; }
  std::string to_csv() const;
};

/// Seeded stratified assignment of rows to k folds. Throws Error if a class has fewer than k rows.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed);

/// Best = lowest mean validation log loss; ties go to fewer estimators, then lower depth.
GridSearchResult grid_search_cv(const Matrix& x, std::span<const int> y, const std::vector<GbdtHyperparams>& grid,
                                std::size_t k, std::uint64_t seed, const FoldAugmenter& augment = {});

/// "round,train_log_loss" lines.
std::string training_report_csv(const BoostedModel& model);

}  // namespace repute::gbdt

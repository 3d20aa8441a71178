#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repute::eval {

/// Binary classification metrics with Illicit (label 1) as the positive class.
/// Undefined ratios (0/0) are reported as 0 and named in `zero_division`.
struct MetricsReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision_illicit = 0.0;
  double recall_illicit = 0.0;
  double f1_illicit = 0.0;
  double precision_reputable = 0.0;
  double recall_reputable = 0.0;
  double f1_reputable = 0.0;
  std::optional<double> log_loss;
  std::vector<std::string> zero_division;

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Throws ShapeError on length mismatch and Error on labels other than 0/1.
MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                              std::optional<std::span<const double>> y_prob = std::nullopt);

struct NamedMetrics {
  std::string name;
  MetricsReport metrics;
};

/// Fixed column order; numbers at 17 significant digits.
std::string metrics_csv(const std::vector<NamedMetrics>& rows);
std::string metrics_markdown(const std::vector<NamedMetrics>& rows);

struct ContractErrors {
  std::string address;
  std::vector<double> errors;  // per window
  int label = 0;               // 1 = illicit
};

/// Everything one autoencoder variant contributes to a sweep.
struct VariantScores {
  std::string variant;
  std::vector<double> training_errors;
  std::vector<ContractErrors> contracts;
};

struct SweepRow {
  std::string variant;
  double percentile = 0.0;
  double cutoff = 0.0;
  MetricsReport metrics;
};

struct SweepTable {
  std::vector<SweepRow> rows;

  std::string to_csv() const;
  std::string to_markdown() const;
  /// Inverse of to_csv for the columns it writes.
  static SweepTable from_csv(std::string_view csv);
};

inline const std::vector<double> kDefaultPercentiles = {75.0, 80.0, 85.0, 90.0};

/// One row per (variant, percentile): the threshold is re-fit on the variant's training
/// errors and every evaluation contract is classified with it.
SweepTable threshold_sweep(const std::vector<VariantScores>& variants,
                           const std::vector<double>& percentiles = kDefaultPercentiles);

}  // namespace repute::eval

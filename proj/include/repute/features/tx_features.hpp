#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repute/common/matrix.hpp"
#include "repute/ingest/records.hpp"

namespace repute::features {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::int64_t kSecondsPerHour = 3600;

enum Feature : std::size_t {
  kTxCount = 0,
  kInternalTxCount,
  kUniqueSenders,
  kUniqueReceivers,
  kTotalValueWei,
  kMeanGasUsed,
  kMeanGasPrice,
  kFailedTxCount,
};

const std::array<std::string_view, kFeatureCount>& feature_names();

using FeatureVector = std::array<double, kFeatureCount>;

/// One contract-hour of aggregated activity. `hour_start` is a multiple of 3600.
struct HourlyWindow {
  std::string contract_address;
  std::int64_t hour_start = 0;
  FeatureVector features{};

  friend bool operator==(const HourlyWindow&, const HourlyWindow&) = default;
};

/// Buckets time-sorted transactions by floor(t/3600). Every hour from the first to
/// the last transaction gets a row; silent hours are all-zero rows.
std::vector<HourlyWindow> aggregate_hourly(std::string_view contract_address,
                                           const std::vector<ingest::TxRecord>& txs);

enum class OutlierMode { Global, PerContract };

/// Drops windows with any feature outside [Q1 - k*IQR, Q3 + k*IQR]. Global mode computes
/// the quartiles over all given windows; PerContract computes them per address.
/// Groups with fewer than 4 windows pass through unchanged (with a warning).
std::vector<HourlyWindow> remove_outlier_windows(const std::vector<HourlyWindow>& windows, double k = 3.0,
                                                 OutlierMode mode = OutlierMode::Global);

/// Per-feature z-scoring with population statistics. Zero-variance features map to 0.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> means, std::vector<double> stds, std::vector<std::string> names);

  /// Throws Error on an empty fit set.
  static Standardizer fit(const Matrix& rows, std::vector<std::string> names = {});
  static Standardizer fit(const std::vector<HourlyWindow>& windows);

  Matrix apply(const Matrix& rows) const;
  std::vector<HourlyWindow> apply(std::vector<HourlyWindow> windows) const;
  void apply_in_place(std::span<double> row) const;

  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  const std::vector<std::string>& names() const { return names_; }

  nlohmann::ordered_json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  std::vector<double> means_;
  std::vector<double> stds_;
  std::vector<std::string> names_;
};

/// W consecutive hours of one contract, W x F.
struct WindowTensor {
  std::string contract_address;
  std::int64_t start_hour = 0;
  Matrix window;
};

/// floor((H-W)/stride)+1 windows for H >= W; shorter series are front-padded with
/// zero rows into a single window. Throws ConfigError when W or stride is < 1.
std::vector<WindowTensor> windowize(const std::vector<HourlyWindow>& hourly, std::size_t window = 24,
                                    std::size_t stride = 1);

Matrix to_matrix(const std::vector<HourlyWindow>& windows);

/// hour_start followed by the feature columns; address column optional.
std::string windows_to_csv(const std::vector<HourlyWindow>& windows, bool with_address = false);
std::vector<HourlyWindow> windows_from_csv(std::string_view csv);
std::string tensor_to_json_line(const WindowTensor& t);
WindowTensor tensor_from_json_line(std::string_view line);

/// Linear-interpolation quantile of `values` (q in [0,1]); sorts a copy.
double quantile(std::vector<double> values, double q);

}  // namespace repute::features

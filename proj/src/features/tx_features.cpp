#include "repute/features/tx_features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/common/log.hpp"

namespace repute::features {
namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "tx_count",       "internal_tx_count", "unique_senders", "unique_receivers",
    "total_value_wei", "mean_gas_used",    "mean_gas_price", "failed_tx_count"};

std::int64_t floor_hour(std::int64_t t) {
  const std::int64_t q = t / kSecondsPerHour;
  return (t % kSecondsPerHour < 0 ? q - 1 : q) * kSecondsPerHour;
}

struct HourAccumulator {
  double tx = 0, internal = 0, value = 0, gas_used = 0, gas_price = 0, priced = 0, failed = 0;
  std::set<std::string> senders, receivers;

  FeatureVector finish() const {
    FeatureVector f{};
    f[kTxCount] = tx;
    f[kInternalTxCount] = internal;
    f[kUniqueSenders] = static_cast<double>(senders.size());
    f[kUniqueReceivers] = static_cast<double>(receivers.size());
    f[kTotalValueWei] = value;
    f[kMeanGasUsed] = tx > 0 ? gas_used / tx : 0.0;
    f[kMeanGasPrice] = priced > 0 ? gas_price / priced : 0.0;
    f[kFailedTxCount] = failed;
    return f;
  }
};

struct Fences {
  FeatureVector lo{}, hi{};
};

Fences compute_fences(const std::vector<const HourlyWindow*>& group, double k) {
  Fences f;
  std::vector<double> column(group.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    for (std::size_t i = 0; i < group.size(); ++i) column[i] = group[i]->features[j];
    const double q1 = quantile(column, 0.25);
    const double q3 = quantile(column, 0.75);
    const double iqr = q3 - q1;
    f.lo[j] = q1 - k * iqr;
    f.hi[j] = q3 + k * iqr;
  }
  return f;
}

bool inside(const HourlyWindow& w, const Fences& f) {
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (w.features[j] < f.lo[j] || w.features[j] > f.hi[j]) return false;
  }
  return true;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<HourlyWindow> aggregate_hourly(std::string_view contract_address,
                                           const std::vector<ingest::TxRecord>& txs) {
  std::vector<HourlyWindow> out;
  if (txs.empty()) return out;
  std::int64_t first = floor_hour(txs.front().timestamp);
  std::int64_t last = first;
  for (const auto& t : txs) {
    first = std::min(first, floor_hour(t.timestamp));
    last = std::max(last, floor_hour(t.timestamp));
  }
  const auto hours = static_cast<std::size_t>((last - first) / kSecondsPerHour + 1);
  std::vector<HourAccumulator> acc(hours);
  for (const auto& t : txs) {
    auto& a = acc[static_cast<std::size_t>((floor_hour(t.timestamp) - first) / kSecondsPerHour)];
    a.tx += 1;
    if (t.is_internal) {
      a.internal += 1;
    } else {
      // Internal calls carry no gas price of their own.
      a.gas_price += t.gas_price.to_double();
      a.priced += 1;
    }
    if (!t.from_addr.empty()) a.senders.insert(t.from_addr);
    if (!t.to_addr.empty()) a.receivers.insert(t.to_addr);
    a.value += t.value.to_double();
    a.gas_used += static_cast<double>(t.gas_used);
    if (t.is_error) a.failed += 1;
  }
  out.reserve(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    out.push_back({std::string(contract_address), first + static_cast<std::int64_t>(h) * kSecondsPerHour,
                   acc[h].finish()});
  }
  return out;
}

std::vector<HourlyWindow> remove_outlier_windows(const std::vector<HourlyWindow>& windows, double k,
                                                 OutlierMode mode) {
  std::map<std::string, std::vector<const HourlyWindow*>> groups;
  if (mode == OutlierMode::Global) {
    for (const auto& w : windows) groups[""].push_back(&w);
  } else {
    for (const auto& w : windows) groups[w.contract_address].push_back(&w);
  }
  std::map<std::string, Fences> fences;
  for (const auto& [key, group] : groups) {
    if (group.size() < 4) {
      logger()->warn("outlier removal needs at least 4 windows (got {} for '{}'); passing through", group.size(),
                     key);
      continue;
    }
    fences.emplace(key, compute_fences(group, k));
  }
  std::vector<HourlyWindow> kept;
  kept.reserve(windows.size());
  for (const auto& w : windows) {
    const auto& key = mode == OutlierMode::Global ? std::string{} : w.contract_address;
    auto it = fences.find(key);
    if (it == fences.end() || inside(w, it->second)) kept.push_back(w);
  }
  return kept;
}

Standardizer::Standardizer(std::vector<double> means, std::vector<double> stds, std::vector<std::string> names)
    : means_(std::move(means)), stds_(std::move(stds)), names_(std::move(names)) {
  if (means_.size() != stds_.size()) throw ShapeError("Standardizer: means/stds length mismatch");
  for (double s : stds_) {
    if (!(s >= 0.0)) throw Error("Standardizer: negative or NaN std");
  }
}

Standardizer Standardizer::fit(const Matrix& rows, std::vector<std::string> names) {
  if (rows.rows() == 0) throw Error("Standardizer::fit: empty fit set");
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  std::vector<double> mean(d, 0.0), std(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += rows(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = rows(i, j) - mean[j];
      std[j] += dv * dv;
    }
  }
  for (auto& s : std) s = std::sqrt(s / static_cast<double>(n));
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  }
  return Standardizer(std::move(mean), std::move(std), std::move(names));
}

Standardizer Standardizer::fit(const std::vector<HourlyWindow>& windows) {
  std::vector<std::string> names(kNames.begin(), kNames.end());
  return fit(to_matrix(windows), std::move(names));
}

void Standardizer::apply_in_place(std::span<double> row) const {
  if (row.size() != means_.size()) throw ShapeError("Standardizer: feature width mismatch");
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] = stds_[j] > 0.0 ? (row[j] - means_[j]) / stds_[j] : 0.0;
  }
}

Matrix Standardizer::apply(const Matrix& rows) const {
  Matrix out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) apply_in_place(out.row(i));
  return out;
}

std::vector<HourlyWindow> Standardizer::apply(std::vector<HourlyWindow> windows) const {
  for (auto& w : windows) apply_in_place(w.features);
  return windows;
}

nlohmann::ordered_json Standardizer::to_json() const {
  nlohmann::ordered_json j;
  j["means"] = means_;
  j["stds"] = stds_;
  j["feature_names"] = names_;
  return j;
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  return Standardizer(j.at("means").get<std::vector<double>>(), j.at("stds").get<std::vector<double>>(),
                      j.value("feature_names", std::vector<std::string>{}));
}

std::vector<WindowTensor> windowize(const std::vector<HourlyWindow>& hourly, std::size_t window, std::size_t stride) {
  if (window < 1) throw ConfigError("window", "must be >= 1");
  if (stride < 1) throw ConfigError("stride", "must be >= 1");
  std::vector<WindowTensor> out;
  if (hourly.empty()) return out;
  const std::size_t h = hourly.size();
  const std::string& address = hourly.front().contract_address;
  if (h < window) {
    const std::size_t pad = window - h;
    WindowTensor t{address, hourly.front().hour_start - static_cast<std::int64_t>(pad) * kSecondsPerHour,
                   Matrix(window, kFeatureCount)};
    for (std::size_t r = 0; r < h; ++r) {
      std::copy(hourly[r].features.begin(), hourly[r].features.end(), t.window.row(pad + r).begin());
    }
    out.push_back(std::move(t));
    return out;
  }
  const std::size_t count = (h - window) / stride + 1;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t begin = s * stride;
    WindowTensor t{address, hourly[begin].hour_start, Matrix(window, kFeatureCount)};
    for (std::size_t r = 0; r < window; ++r) {
      std::copy(hourly[begin + r].features.begin(), hourly[begin + r].features.end(), t.window.row(r).begin());
    }
    out.push_back(std::move(t));
  }
  return out;
}

Matrix to_matrix(const std::vector<HourlyWindow>& windows) {
  Matrix m(windows.size(), kFeatureCount);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::copy(windows[i].features.begin(), windows[i].features.end(), m.row(i).begin());
  }
  return m;
}

std::string windows_to_csv(const std::vector<HourlyWindow>& windows, bool with_address) {
  std::ostringstream out;
  if (with_address) out << "address,";
  out << "hour_start";
  for (auto n : kNames) out << ',' << n;
  out << '\n';
  for (const auto& w : windows) {
    if (with_address) out << w.contract_address << ',';
    out << w.hour_start;
    for (double v : w.features) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::vector<HourlyWindow> windows_from_csv(std::string_view csv) {
  std::vector<HourlyWindow> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool with_address = false;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (header) {
      with_address = !cols.empty() && cols[0] == "address";
      header = false;
      continue;
    }
    const std::size_t base = with_address ? 1 : 0;
    if (cols.size() != base + 1 + kFeatureCount) throw ParseError("hourly CSV: wrong column count", 0);
    HourlyWindow w;
    if (with_address) w.contract_address = cols[0];
    w.hour_start = static_cast<std::int64_t>(parse_double(cols[base]));
    for (std::size_t j = 0; j < kFeatureCount; ++j) w.features[j] = parse_double(cols[base + 1 + j]);
    out.push_back(std::move(w));
  }
  return out;
}

std::string tensor_to_json_line(const WindowTensor& t) {
  nlohmann::ordered_json j;
  j["address"] = t.contract_address;
  j["start_hour"] = t.start_hour;
  j["rows"] = t.window.rows();
  j["cols"] = t.window.cols();
  j["data"] = t.window.data();
  return j.dump();
}

WindowTensor tensor_from_json_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  return WindowTensor{j.at("address").get<std::string>(), j.at("start_hour").get<std::int64_t>(),
                      Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                             j.at("data").get<std::vector<double>>())};
}

}  // namespace repute::features

#include <algorithm>
#include <cmath>

#include "repute/cae/autoencoder.hpp"
#include "repute/common/error.hpp"

namespace repute::cae {

AnomalyThreshold fit_threshold(std::span<const double> training_errors, double p, std::string provenance) {
  if (!(p >= 75.0 && p <= 90.0)) throw ConfigError("cae.threshold.percentile", "must be in [75, 90]");
  if (training_errors.empty()) throw Error("fit_threshold: no training errors");
  std::vector<double> sorted(training_errors.begin(), training_errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  const double cutoff = frac == 0.0 ? sorted[lo] : sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  return AnomalyThreshold{p, cutoff, std::move(provenance)};
}

AnomalyReport classify_contract(std::string_view address, std::vector<double> errors,
                                const AnomalyThreshold& threshold) {
  if (errors.empty()) throw Error("classify_contract: contract " + std::string(address) + " has no windows");
  AnomalyReport r;
  r.contract_address = std::string(address);
  r.threshold = threshold;
  r.anomalous = static_cast<std::size_t>(
      std::count_if(errors.begin(), errors.end(), [&](double e) { return e > threshold.cutoff; }));
  r.anomaly_ratio = static_cast<double>(r.anomalous) / static_cast<double>(errors.size());
  r.verdict = r.anomaly_ratio > kIllicitRatio ? ingest::Label::Illicit : ingest::Label::Reputable;
  r.errors = std::move(errors);
  return r;
}

std::vector<AnomalyReport> classify_contracts(const std::vector<features::WindowTensor>& windows,
                                              std::span<const double> errors, const AnomalyThreshold& threshold) {
  if (windows.size() != errors.size()) throw ShapeError("classify_contracts: one error per window required");
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>, std::less<>> grouped;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto [it, inserted] = grouped.try_emplace(windows[i].contract_address);
    if (inserted) order.push_back(windows[i].contract_address);
    it->second.push_back(errors[i]);
  }
  std::vector<AnomalyReport> out;
  out.reserve(order.size());
  for (const auto& a : order) out.push_back(classify_contract(a, std::move(grouped[a]), threshold));
  return out;
}

nlohmann::ordered_json AnomalyReport::to_json() const {
  return {{"address", contract_address},
          {"percentile", threshold.percentile},
          {"cutoff", threshold.cutoff},
          {"threshold_provenance", threshold.provenance},
          {"windows", errors.size()},
          {"anomalous", anomalous},
          {"anomaly_ratio", anomaly_ratio},
          {"verdict", ingest::label_name(verdict)},
          {"errors", errors}};
}

AnomalyReport AnomalyReport::from_json(const nlohmann::json& j) {
  AnomalyReport r;
  r.contract_address = j.at("address").get<std::string>();
  r.threshold = AnomalyThreshold{j.at("percentile").get<double>(), j.at("cutoff").get<double>(),
                                 j.value("threshold_provenance", std::string{})};
  r.errors = j.at("errors").get<std::vector<double>>();
  r.anomalous = j.at("anomalous").get<std::size_t>();
  r.anomaly_ratio = j.at("anomaly_ratio").get<double>();
  r.verdict = ingest::parse_label(j.at("verdict").get<std::string>());
  return r;
}

}  // namespace repute::cae

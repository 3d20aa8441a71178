#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "repute/augment/augmentation.hpp"
#include "repute/common/log.hpp"
#include "repute/kernels/distance.hpp"

namespace repute::augment {
namespace {

void check_inputs(const Matrix& minority, const AugmentationConfig& cfg) {
  if (cfg.k_neighbors == 0) throw ConfigError("augmentation.k_neighbors", "must be positive");
  if (minority.rows() <= cfg.k_neighbors) {
    throw Error("oversampling needs more than k_neighbors=" + std::to_string(cfg.k_neighbors) +
                " minority rows, got " + std::to_string(minority.rows()));
  }
  if (cfg.target_count < minority.rows()) {
    throw ConfigError("augmentation.target_count", "below the current minority count " +
                                                       std::to_string(minority.rows()));
  }
}

void interpolate(const Matrix& minority, std::size_t base, std::size_t neighbour, double lambda, Synthesis& out) {
  const auto a = minority.row(base);
  const auto b = minority.row(neighbour);
  std::vector<double> row(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) row[j] = a[j] + lambda * (b[j] - a[j]);
  out.samples.append_row(row);
  out.origins.push_back({base, neighbour, lambda});
}

Synthesis generate(const Matrix& minority, const std::vector<std::size_t>& per_row, std::size_t k,
                   std::uint64_t seed) {
  const auto neighbours = kernels::omp::knn(minority, minority, k, true);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Synthesis out{Matrix(0, minority.cols()), {}};
  for (std::size_t i = 0; i < per_row.size(); ++i) {
    for (std::size_t s = 0; s < per_row[i]; ++s) {
      const std::size_t nn = neighbours[i][pick(rng)];
      interpolate(minority, i, nn, unit(rng), out);
    }
  }
  return out;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::SMOTE:
      return "smote";
    case Method::ADASYN:
      return "adasyn";
    case Method::GAN:
      return "gan";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  std::string v(s);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "smote") return Method::SMOTE;
  if (v == "adasyn") return Method::ADASYN;
  if (v == "gan") return Method::GAN;
  throw ConfigError("augmentation.method", "unknown method '" + std::string(s) + "'");
}

Synthesis smote(const Matrix& minority, const AugmentationConfig& cfg) {
  check_inputs(minority, cfg);
  const std::size_t deficit = cfg.target_count - minority.rows();
  // Bases are drawn uniformly; neighbour and lambda use the same stream.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> base_dist(0, minority.rows() - 1);
  std::vector<std::size_t> per_row(minority.rows(), 0);
  for (std::size_t s = 0; s < deficit; ++s) ++per_row[base_dist(rng)];
  return generate(minority, per_row, cfg.k_neighbors, rng());
}

std::vector<double> adasyn_weights(const Matrix& minority, const Matrix& majority, std::size_t k) {
  const Matrix combined = Matrix::vstack(minority, majority);
  const auto neighbours = kernels::omp::knn(minority, combined, k, true);
  std::vector<double> r(minority.rows(), 0.0);
  for (std::size_t i = 0; i < minority.rows(); ++i) {
    std::size_t majority_count = 0;
    for (std::size_t j : neighbours[i]) majority_count += j >= minority.rows() ? 1 : 0;
    r[i] = static_cast<double>(majority_count) / static_cast<double>(k);
  }
  return r;
}

std::vector<std::size_t> allocate_largest_remainder(const std::vector<double>& weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) return out;
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / sum * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t t = 0; assigned < total; t = (t + 1) % order.size()) {
    ++out[order[t]];
    ++assigned;
  }
  return out;
}

Synthesis adasyn(const Matrix& minority, const Matrix& majority, const AugmentationConfig& cfg) {
  check_inputs(minority, cfg);
  if (majority.rows() == 0) throw Error("adasyn: majority class is empty");
  if (majority.cols() != minority.cols()) throw ShapeError("adasyn: majority/minority width mismatch");
  auto weights = adasyn_weights(minority, majority, cfg.k_neighbors);
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    logger()->warn("adasyn: no minority point has majority neighbours; falling back to uniform SMOTE weights");
    std::fill(weights.begin(), weights.end(), 1.0);
  }
  const auto per_row = allocate_largest_remainder(weights, cfg.target_count - minority.rows());
  return generate(minority, per_row, cfg.k_neighbors, cfg.seed);
}

}  // namespace repute::augment

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/gbdt/gbdt.hpp"
#include "repute/kernels/parallel_map.hpp"

namespace repute::gbdt {
namespace {

template <typename T>
std::vector<T> list_or(const nlohmann::json& j, const char* key, std::vector<T> fallback) {
  return j.contains(key) ? j.at(key).get<std::vector<T>>() : fallback;
}

// Configs that differ only in n_estimators share one fit.
auto family_key(const GbdtHyperparams& hp) {
  return std::make_tuple(hp.learning_rate, hp.max_depth, hp.subsample, hp.reg_alpha, hp.reg_lambda,
                         hp.min_samples_leaf, hp.n_bins, hp.seed);
}

struct FoldScores {
  std::vector<double> loss;      // per entry of the family's estimator counts
  std::vector<double> accuracy;
};

}  // namespace

std::vector<GbdtHyperparams> GridSpec::expand() const {
  std::vector<GbdtHyperparams> out;
  for (double lr : learning_rates)
    for (std::size_t depth : max_depths)
      for (std::size_t n : n_estimators)
        for (double ss : subsamples)
          for (double a : reg_alphas)
            for (double l : reg_lambdas) {
              GbdtHyperparams hp = base;
              hp.learning_rate = lr;
              hp.max_depth = depth;
              hp.n_estimators = n;
              hp.subsample = ss;
              hp.reg_alpha = a;
              hp.reg_lambda = l;
              out.push_back(hp);
            }
  return out;
}

nlohmann::ordered_json GridSpec::to_json() const {
  return {{"learning_rates", learning_rates}, {"max_depths", max_depths}, {"n_estimators", n_estimators},
          {"subsamples", subsamples},         {"reg_alphas", reg_alphas}, {"reg_lambdas", reg_lambdas},
          {"base", base.to_json()}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec g;
  g.learning_rates = list_or(j, "learning_rates", g.learning_rates);
  g.max_depths = list_or(j, "max_depths", g.max_depths);
  g.n_estimators = list_or(j, "n_estimators", g.n_estimators);
  g.subsamples = list_or(j, "subsamples", g.subsamples);
  g.reg_alphas = list_or(j, "reg_alphas", g.reg_alphas);
  g.reg_lambdas = list_or(j, "reg_lambdas", g.reg_lambdas);
  if (j.contains("base")) g.base = GbdtHyperparams::from_json(j.at("base"));
  return g;
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("gbdt.folds", "need at least 2 folds");
  std::vector<std::size_t> fold(y.size());
  std::mt19937_64 rng(seed);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) idx.push_back(i);
    if (idx.size() < k) {
      throw Error("stratified_folds: class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                  " rows, fewer than k=" + std::to_string(k));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = i % k;
  }
  return fold;
}

GridSearchResult grid_search_cv(const Matrix& x, std::span<const int> y, const std::vector<GbdtHyperparams>& grid,
                                std::size_t k, std::uint64_t seed, const FoldAugmenter& augment) {
  if (grid.empty()) throw ConfigError("gbdt.grid", "grid is empty");
  if (x.rows() != y.size()) throw ShapeError("grid_search_cv: X/y length mismatch");
  for (const auto& hp : grid) hp.validate();

  GridSearchResult result;
  result.fold_of = stratified_folds(y, k, seed);

  // Families in first-appearance order, each with its sorted distinct estimator counts.
  std::vector<GbdtHyperparams> families;
  std::vector<std::vector<std::size_t>> counts;
  std::map<decltype(family_key(grid[0])), std::size_t> family_of;
  for (const auto& hp : grid) {
    auto [it, inserted] = family_of.try_emplace(family_key(hp), families.size());
    if (inserted) {
      families.push_back(hp);
      counts.emplace_back();
    }
    auto& c = counts[it->second];
    if (std::find(c.begin(), c.end(), hp.n_estimators) == c.end()) c.push_back(hp.n_estimators);
  }
  for (std::size_t f = 0; f < families.size(); ++f) {
    std::sort(counts[f].begin(), counts[f].end());
    families[f].n_estimators = counts[f].back();
  }

  // Training folds are materialized (and augmented) once, before the parallel section.
  struct FoldData {
    Matrix train_x, valid_x;
    std::vector<int> train_y, valid_y;
  };
  std::vector<FoldData> folds(k);
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < y.size(); ++i) (result.fold_of[i] == fold ? va : tr).push_back(i);
    auto& fd = folds[fold];
    fd.train_x = x.select_rows(tr);
    fd.valid_x = x.select_rows(va);
    for (std::size_t i : tr) fd.train_y.push_back(y[i]);
    for (std::size_t i : va) fd.valid_y.push_back(y[i]);
    if (augment) std::tie(fd.train_x, fd.train_y) = augment(fd.train_x, fd.train_y, fold);
  }

  const std::size_t tasks = families.size() * k;
  const auto scores = kernels::omp::map_indexed(tasks, [&](std::size_t t) {
    const std::size_t f = t / k;
    const auto& fd = folds[t % k];
    const BoostedModel model = fit(fd.train_x, fd.train_y, families[f]);
    FoldScores s;
    for (std::size_t n : counts[f]) {
      std::vector<double> p(fd.valid_x.rows());
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = model.margin(fd.valid_x.row(i), n);
        p[i] = 1.0 / (1.0 + std::exp(-m));
      }
      std::size_t correct = 0;
      for (std::size_t i = 0; i < p.size(); ++i) correct += (p[i] >= 0.5 ? 1 : 0) == fd.valid_y[i];
      s.loss.push_back(log_loss(fd.valid_y, p));
      s.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(p.size()));
    }
    return s;
  });

  for (const auto& hp : grid) {
    const std::size_t f = family_of.at(family_key(hp));
    const auto pos = static_cast<std::size_t>(
        std::find(counts[f].begin(), counts[f].end(), hp.n_estimators) - counts[f].begin());
    CvRow row{hp, {}, {}, 0.0, 0.0};
    for (std::size_t fold = 0; fold < k; ++fold) {
      row.fold_log_loss.push_back(scores[f * k + fold].loss[pos]);
      row.fold_accuracy.push_back(scores[f * k + fold].accuracy[pos]);
    }
    row.mean_log_loss = std::accumulate(row.fold_log_loss.begin(), row.fold_log_loss.end(), 0.0) / double(k);
    row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) / double(k);
    result.rows.push_back(std::move(row));
  }

  auto better = [](const CvRow& a, const CvRow& b) {
    return std::tie(a.mean_log_loss, a.hp.n_estimators, a.hp.max_depth) <
           std::tie(b.mean_log_loss, b.hp.n_estimators, b.hp.max_depth);
  };
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (better(result.rows[i], result.rows[result.best_index])) result.best_index = i;
  }
  return result;
}

std::string GridSearchResult::to_csv() const {
  std::string out =
      "learning_rate,max_depth,n_estimators,subsample,reg_alpha,reg_lambda,mean_log_loss,mean_accuracy,best\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += format_double(r.hp.learning_rate) + "," + std::to_string(r.hp.max_depth) + "," +
           std::to_string(r.hp.n_estimators) + "," + format_double(r.hp.subsample) + "," +
           format_double(r.hp.reg_alpha) + "," + format_double(r.hp.reg_lambda) + "," +
           format_double(r.mean_log_loss) + "," + format_double(r.mean_accuracy) + "," +
           (i == best_index ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace repute::gbdt

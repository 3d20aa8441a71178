#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "repute/common/error.hpp"
#include "repute/gbdt/gbdt.hpp"

using namespace repute;
using namespace repute::gbdt;

namespace {

struct Dataset {
  Matrix x;
  std::vector<int> y;
};

Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, bool integer_grid) {
  Dataset ds{Matrix(n, d), std::vector<int>(n)};
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& v : ds.x.data()) v = integer_grid ? static_cast<double>(rng() % 5) : g(rng);
  for (std::size_t i = 0; i < n; ++i) ds.y[i] = (ds.x(i, 0) + 0.7 * g(rng) > 0.3) ? 1 : 0;
  ds.y[0] = 0;
  ds.y[1] = 1;
  return ds;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

}  // namespace

TEST(Gbdt, StumpMatchesBruteForceSplit) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng() % 29, d = 1 + rng() % 3;
    const auto ds = random_dataset(rng, n, d, trial % 3 == 0);
    GbdtHyperparams hp;
    hp.max_depth = 1;
    hp.n_estimators = 1;
    hp.subsample = 1.0;
    hp.reg_alpha = trial % 2 ? 0.0 : 0.1;
    hp.reg_lambda = trial % 4 < 2 ? 0.01 : 1.0;
    hp.min_samples_leaf = 1 + trial % 2;
    const auto model = fit(ds.x, ds.y, hp);
    const auto oracle_split =
        oracle::brute_force_stump(rows_of(ds.x), ds.y, hp.reg_alpha, hp.reg_lambda, hp.min_samples_leaf);
    const auto& root = model.trees.at(0).nodes.at(0);
    SCOPED_TRACE("trial " + std::to_string(trial));
    if (oracle_split.feature < 0) {
      EXPECT_LT(root.feature, 0);
      continue;
    }
    ASSERT_GE(root.feature, 0);
    std::vector<bool> left(n);
    for (std::size_t i = 0; i < n; ++i) left[i] = ds.x(i, static_cast<std::size_t>(root.feature)) <= root.threshold;
    bool matched = false;
    for (const auto& [f, part] : oracle_split.near_ties) matched |= (f == root.feature && part == left);
    EXPECT_TRUE(matched);
  }
}

TEST(Gbdt, TrainingLossNonIncreasingWithoutSubsampling) {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = random_dataset(rng, 40 + rng() % 60, 3, false);
    GbdtHyperparams hp;
    hp.subsample = 1.0;
    hp.n_estimators = 50;
    hp.max_depth = 3;
    hp.seed = static_cast<std::uint64_t>(trial);
    const auto model = fit(ds.x, ds.y, hp);
    ASSERT_EQ(model.train_log_loss.size(), 51u);
    for (std::size_t r = 1; r < model.train_log_loss.size(); ++r) {
      EXPECT_LE(model.train_log_loss[r], model.train_log_loss[r - 1] + 1e-12) << "round " << r;
    }
  }
}

TEST(Gbdt, PriorIsLogOdds) {
  const Matrix x(4, 1, {1, 2, 3, 4});
  const std::vector<int> y = {0, 0, 0, 1};
  GbdtHyperparams hp;
  hp.n_estimators = 0;
  const auto m = fit(x, y, hp);
  EXPECT_NEAR(m.base_score, std::log(0.25 / 0.75), 1e-15);
  EXPECT_NEAR(predict_proba(m, x)[0], 0.25, 1e-15);
}

TEST(Gbdt, MonotoneRescalingLeavesPartitionsUnchanged) {
  std::mt19937_64 rng(303);
  const auto ds = random_dataset(rng, 80, 3, false);
  Matrix scaled = ds.x;
  for (auto& v : scaled.data()) v = 3.0 * v + 7.0;
  GbdtHyperparams hp;
  hp.n_estimators = 20;
  hp.seed = 5;
  const auto a = predict_proba(fit(ds.x, ds.y, hp), ds.x);
  const auto b = predict_proba(fit(scaled, ds.y, hp), scaled);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Gbdt, LearnsSeparableData) {
  Matrix x(0, 2);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    x.append_row(std::vector<double>{static_cast<double>(i), static_cast<double>(i % 7)});
    y.push_back(i >= 30);
  }
  GbdtHyperparams hp;
  hp.n_estimators = 100;
  hp.subsample = 1.0;
  const auto model = fit(x, y, hp);
  const auto p = predict_proba(model, x);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i] >= 0.5, y[i] == 1);
  for (const auto& t : model.trees) EXPECT_LE(t.depth(), hp.max_depth);
}

TEST(Gbdt, ErrorsAndValidation) {
  const Matrix x(3, 1, {1, 2, 3});
  EXPECT_THROW(fit(x, std::vector<int>{1, 1, 1}, {}), Error);
  Matrix bad = x;
  bad(1, 0) = std::nan("");
  EXPECT_THROW(fit(bad, std::vector<int>{0, 1, 1}, {}), Error);
  const auto m = fit(x, std::vector<int>{0, 1, 1}, {});
  EXPECT_THROW(predict_proba(m, Matrix(1, 2)), ShapeError);
  GbdtHyperparams hp;
  hp.learning_rate = 0;
  try {
    hp.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "gbdt.learning_rate");
  }
  hp = {};
  hp.subsample = 1.5;
  EXPECT_THROW(hp.validate(), ConfigError);
}

TEST(Gbdt, JsonRoundTripPredictsIdentically) {
  std::mt19937_64 rng(404);
  const auto ds = random_dataset(rng, 50, 3, false);
  GbdtHyperparams hp;
  hp.n_estimators = 15;
  const auto m = fit(ds.x, ds.y, hp);
  const auto back = BoostedModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(predict_proba(back, ds.x), predict_proba(m, ds.x));
  EXPECT_EQ(back.hyperparams, hp);
}

TEST(Gbdt, SplitScoreAndSoftThreshold) {
  EXPECT_EQ(soft_threshold(0.05, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(0.5, 0.1), 0.4);
  EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 0.1), -0.4);
  EXPECT_DOUBLE_EQ(split_score(2.1, 3.0, 0.1, 1.0), 1.0);
  EXPECT_TRUE(improves(1.0, 0.0));
  EXPECT_FALSE(improves(1.0 + 1e-14, 1.0));
}

TEST(Gbdt, BinMapperThinsToBudget) {
  Matrix x(200, 1);
  for (std::size_t i = 0; i < 200; ++i) x(i, 0) = static_cast<double>(i);
  const auto bm = BinMapper::fit(x, 16);
  EXPECT_LE(bm.cuts[0].size(), 15u);
  const auto b = bm.transform(x);
  for (std::size_t i = 1; i < 200; ++i) EXPECT_LE(b.at(i - 1, 0), b.at(i, 0));
}

TEST(GridSearch, StratifiedFoldsAndSelection) {
  std::vector<int> y(50, 0);
  for (int i = 0; i < 10; ++i) y[i * 5] = 1;
  const auto folds = stratified_folds(y, 5, 1);
  std::vector<int> pos(5), all(5);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++all[folds[i]];
    pos[folds[i]] += y[i];
  }
  for (int f = 0; f < 5; ++f) {
    EXPECT_EQ(all[f], 10);
    EXPECT_EQ(pos[f], 2);
  }
  EXPECT_EQ(stratified_folds(y, 5, 1), folds);
  EXPECT_THROW(stratified_folds(std::vector<int>{0, 0, 0, 1}, 2, 1), Error);

  std::mt19937_64 rng(505);
  const auto ds = random_dataset(rng, 60, 2, false);
  GridSpec spec;
  spec.learning_rates = {0.1, 0.01};
  spec.max_depths = {1, 3};
  spec.n_estimators = {10, 30};
  const auto grid = spec.expand();
  EXPECT_EQ(grid.size(), 8u);
  const auto res = grid_search_cv(ds.x, ds.y, grid, 3, 7);
  ASSERT_EQ(res.rows.size(), 8u);
  for (const auto& r : res.rows) EXPECT_GE(r.mean_log_loss, res.rows[res.best_index].mean_log_loss);

  // Truncated-margin scoring must agree with refitting at the smaller size.
  for (const auto& row : res.rows) {
    double ll = 0;
    for (std::size_t f = 0; f < 3; ++f) {
      Matrix tx(0, 2), vx(0, 2);
      std::vector<int> ty, vy;
      for (std::size_t i = 0; i < ds.y.size(); ++i) {
        if (res.fold_of[i] == f) {
          vx.append_row(ds.x.row(i));
          vy.push_back(ds.y[i]);
        } else {
          tx.append_row(ds.x.row(i));
          ty.push_back(ds.y[i]);
        }
      }
      ll += log_loss(vy, predict_proba(fit(tx, ty, row.hp), vx));
    }
    EXPECT_NEAR(ll / 3, row.mean_log_loss, 1e-12);
  }
  const auto csv = res.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "learning_rate,max_depth,n_estimators,subsample,reg_alpha,reg_lambda,mean_log_loss,mean_accuracy,best");
}

TEST(GridSearch, AugmenterSeesTrainingFoldsOnly) {
  std::mt19937_64 rng(606);
  const auto ds = random_dataset(rng, 40, 2, false);
  GridSpec spec;
  spec.learning_rates = {0.1};
  spec.max_depths = {2};
  spec.n_estimators = {5};
  std::vector<std::size_t> seen;
  const FoldAugmenter aug = [&](const Matrix& x, const std::vector<int>& y, std::size_t fold) {
    seen.push_back(x.rows());
    return std::make_pair(x, y);
  };
  const auto res = grid_search_cv(ds.x, ds.y, spec.expand(), 4, 1, aug);
  ASSERT_EQ(seen.size(), 4u);
  for (std::size_t f = 0; f < 4; ++f) {
    std::size_t in_fold = 0;
    for (auto v : res.fold_of) in_fold += v == f;
    EXPECT_EQ(seen[f], ds.y.size() - in_fold);
  }
}

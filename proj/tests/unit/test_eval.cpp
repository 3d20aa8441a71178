#include <gtest/gtest.h>

#include <random>

#include "repute/common/error.hpp"
#include "repute/eval/metrics.hpp"

using namespace repute;
using namespace repute::eval;

TEST(Metrics, HandConfusionMatrix) {
  const std::vector<int> t = {1, 1, 0, 0}, p = {1, 0, 0, 0};
  const auto m = compute_metrics(t, p);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.tn, 2u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_DOUBLE_EQ(m.recall_illicit, 0.5);
  EXPECT_DOUBLE_EQ(m.f1_illicit, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m.precision_reputable, 2.0 / 3.0);
  EXPECT_TRUE(m.zero_division.empty());
}

TEST(Metrics, DegenerateAllNegative) {
  std::vector<int> t(100, 0), p(100, 0);
  for (int i = 0; i < 6; ++i) t[i] = 1;
  const auto m = compute_metrics(t, p);
  EXPECT_EQ(m.recall_illicit, 0.0);
  EXPECT_EQ(m.f1_illicit, 0.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.94);
  EXPECT_FALSE(m.zero_division.empty());
}

TEST(Metrics, PerfectAndLogLoss) {
  const std::vector<int> t = {1, 0, 1};
  const std::vector<double> prob = {0.9, 0.2, 0.6};
  const auto m = compute_metrics(t, t, std::span<const double>(prob));
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_illicit, 1.0);
  EXPECT_EQ(m.f1_reputable, 1.0);
  ASSERT_TRUE(m.log_loss.has_value());
  EXPECT_NEAR(*m.log_loss, -(std::log(0.9) + std::log(0.8) + std::log(0.6)) / 3, 1e-15);
  EXPECT_THROW(compute_metrics(t, std::vector<int>{1, 0}), ShapeError);
  EXPECT_THROW(compute_metrics(t, std::vector<int>{1, 0, 2}), Error);
}

TEST(Metrics, PolaritySwapProperty) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> t(1 + rng() % 40), p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<int>(rng() % 2);
      p[i] = static_cast<int>(rng() % 2);
    }
    const auto a = compute_metrics(t, p);
    for (auto& v : t) v = 1 - v;
    for (auto& v : p) v = 1 - v;
    const auto b = compute_metrics(t, p);
    EXPECT_EQ(a.total(), t.size());
    EXPECT_DOUBLE_EQ(a.accuracy, static_cast<double>(a.tp + a.tn) / static_cast<double>(a.total()));
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.recall_illicit, b.recall_reputable);
    EXPECT_EQ(a.precision_illicit, b.precision_reputable);
    EXPECT_EQ(a.f1_illicit, b.f1_reputable);
    EXPECT_EQ(a.tp, b.tn);
    for (double v : {a.accuracy, a.recall_illicit, a.precision_illicit, a.f1_illicit, a.f1_reputable}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Reports, CsvIsDeterministicAndOneLinePerRow) {
  const std::vector<NamedMetrics> rows = {{"a", compute_metrics(std::vector<int>{1, 0}, std::vector<int>{1, 1})}};
  const auto csv = metrics_csv(rows);
  EXPECT_EQ(csv, metrics_csv(rows));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  const auto empty = metrics_csv({});
  EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 1);
  EXPECT_NE(metrics_markdown(rows).find("| a |"), std::string::npos);
}

TEST(Sweep, RowsPerVariantAndThreshold) {
  VariantScores v1{"transaction_only", {}, {}};
  for (int i = 1; i <= 100; ++i) v1.training_errors.push_back(i / 100.0);
  v1.contracts.push_back({"0xa", {0.1, 0.2, 0.3}, 0});
  v1.contracts.push_back({"0xb", {2.0, 2.0, 0.1}, 1});
  v1.contracts.push_back({"0xc", {0.95, 0.5, 0.5}, 1});
  VariantScores v2 = v1;
  v2.variant = "multimodal";
  const auto table = threshold_sweep({v1, v2});
  ASSERT_EQ(table.rows.size(), 8u);
  EXPECT_EQ(table.rows[0].variant, "transaction_only");
  EXPECT_EQ(table.rows[0].percentile, 75.0);
  EXPECT_EQ(table.rows[3].percentile, 90.0);
  EXPECT_NEAR(table.rows[3].cutoff, 0.901, 1e-12);
  // p=75: cutoff 0.7525 flags 0xc (1/3 > 0.30); p=90: cutoff 0.901 also flags it.
  EXPECT_EQ(table.rows[0].metrics.tp, 2u);
  EXPECT_EQ(table.rows[3].metrics.tp, 2u);
  EXPECT_EQ(table.rows[3].metrics.tn, 1u);

  const auto csv = table.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "variant,percentile,cutoff,accuracy,precision_illicit,recall_illicit,f1_reputable,f1_illicit,tp,fp,tn,fn");
  const auto back = SweepTable::from_csv(csv);
  EXPECT_EQ(back.to_csv(), csv);
  ASSERT_EQ(back.rows.size(), 8u);
  EXPECT_EQ(back.rows[5].cutoff, table.rows[5].cutoff);
  EXPECT_EQ(back.rows[5].metrics.recall_illicit, table.rows[5].metrics.recall_illicit);
  const auto empty = SweepTable{}.to_csv();
  EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 1);
}

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "repute/common/error.hpp"
#include "repute/embed/embeddings.hpp"

using namespace repute;
using namespace repute::embed;

namespace {

evm::CategorySequence seq(std::vector<std::uint8_t> ids, std::string addr = "0x1") {
  return {std::move(addr), std::move(ids)};
}

}  // namespace

TEST(Embeddings, MeanPoolingOracle) {
  EmbeddingTable t;
  t.rows = Matrix(3, 2, {1, 2, 10, 20, -4, 0});
  const auto e = embed_sequence(seq({0, 1, 1, 2}), t);
  EXPECT_DOUBLE_EQ(e.vector[0], (1 + 10 + 10 - 4) / 4.0);
  EXPECT_DOUBLE_EQ(e.vector[1], (2 + 20 + 20 + 0) / 4.0);
  const auto z = embed_sequence(seq({}), t);
  EXPECT_EQ(z.vector, (std::vector<double>{0, 0}));
  EXPECT_THROW(embed_sequence(seq({3}), t), Error);
}

TEST(Embeddings, FrequenciesSumToOne) {
  const auto f = category_frequencies(seq({0, 0, 4, 14}), 15);
  EXPECT_EQ(f.size(), 15u);
  EXPECT_DOUBLE_EQ(f[0], 0.5);
  EXPECT_DOUBLE_EQ(f[4], 0.25);
  EXPECT_DOUBLE_EQ(f[14], 0.25);
}

TEST(Embeddings, TableMatchesNetworkPooling) {
  EmbeddingConfig cfg;
  cfg.dim = 7;
  cfg.seed = 3;
  EmbeddingModel model(cfg);
  const auto s = seq({1, 5, 5, 9, 14, 0});
  const auto pooled = embed_sequence(s, model.table());
  const auto f = category_frequencies(s, cfg.vocab);
  const auto hidden = model.network().infer_prefix(nn::Tensor({cfg.vocab}, f), 0);
  ASSERT_EQ(hidden.size(), pooled.vector.size());
  for (std::size_t j = 0; j < hidden.size(); ++j) EXPECT_NEAR(hidden[j], pooled.vector[j], 1e-12);
}

TEST(Embeddings, TrainingSeparatesClasses) {
  std::mt19937_64 rng(8);
  std::vector<LabelledSequence> data;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 3 == 0;
    std::vector<std::uint8_t> ids;
    for (int k = 0; k < 40; ++k) {
      const bool skew = rng() % 10 < 7;
      ids.push_back(label ? (skew ? 13 : 7) : (skew ? 0 : 6));
    }
    data.push_back({seq(ids), label});
  }
  EmbeddingConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 60;
  cfg.learning_rate = 1e-2;
  cfg.seed = 1;
  const auto result = train_embeddings(data, cfg);
  EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
  int correct = 0;
  for (const auto& d : data) correct += (result.model.predict(d.sequence) >= 0.5) == (d.label == 1);
  EXPECT_GE(correct, 57);

  const auto again = train_embeddings(data, cfg);
  EXPECT_EQ(again.model.table().rows, result.model.table().rows);

  std::vector<LabelledSequence> one_class(data.begin(), data.begin() + 1);
  one_class.push_back(data[3]);
  EXPECT_THROW(train_embeddings(one_class, cfg), Error);
}

TEST(Embeddings, CsvAndModelRoundTrip) {
  EmbeddingConfig cfg;
  cfg.dim = 4;
  cfg.seed = 5;
  EmbeddingModel model(cfg);
  std::vector<ContractEmbedding> rows;
  for (int i = 0; i < 3; ++i) rows.push_back(embed_sequence(seq({static_cast<std::uint8_t>(i), 2}, "0xa" + std::to_string(i)), model.table()));
  const auto back = import_embeddings_csv(export_embeddings_csv(rows, 4));
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].contract_address, rows[i].contract_address);
    EXPECT_EQ(back[i].vector, rows[i].vector);
  }
  const auto path = std::filesystem::temp_directory_path() / "repute_embed_test.model";
  model.save(path, 5);
  EXPECT_EQ(EmbeddingModel::load(path).table().rows, model.table().rows);
  std::filesystem::remove(path);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "repute/common/matrix.hpp"
#include "repute/evm/disassembler.hpp"
#include "repute/nn/network.hpp"

namespace repute::embed {

/// One learned row per opcode category (V x D).
struct EmbeddingTable {
  Matrix rows;
  std::vector<std::string> category_names;

  std::size_t vocab() const { return rows.rows(); }
  std::size_t dim() const { return rows.cols(); }
};

struct ContractEmbedding {
  std::string contract_address;
  std::vector<double> vector;
};

/// Mean of the table rows named by the sequence. An empty sequence gives the zero
/// vector (with a warning); an id >= vocab throws Error.
ContractEmbedding embed_sequence(const evm::CategorySequence& seq, const EmbeddingTable& table);

/// Category frequencies (count / length) over a vocabulary of `vocab` ids.
std::vector<double> category_frequencies(const evm::CategorySequence& seq, std::size_t vocab);

struct EmbeddingConfig {
  std::size_t vocab = evm::kCategoryCount;
  std::size_t dim = 50;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct LabelledSequence {
  evm::CategorySequence sequence;
  int label = 0;  // 1 = illicit
};

/// Table and logistic head trained jointly with binary cross-entropy.
///
/// Mean pooling of table rows equals a bias-free dense map applied to the category
/// frequency vector, so the network is [Dense(V->D, no bias), Dense(D->1), Sigmoid] and
/// the table is the transpose of the first weight matrix.
class EmbeddingModel {
 public:
  explicit EmbeddingModel(const EmbeddingConfig& cfg);
  explicit EmbeddingModel(nn::Network network);

  EmbeddingTable table() const;
  /// P(illicit) from the diagnostic head.
  double predict(const evm::CategorySequence& seq) const;

  nn::Network& network() { return net_; }
  const nn::Network& network() const { return net_; }
  std::size_t vocab() const { return vocab_; }
  std::size_t dim() const { return dim_; }

  void save(const std::filesystem::path& path, std::uint64_t seed) const;
  static EmbeddingModel load(const std::filesystem::path& path);

 private:
  nn::Network net_;
  std::size_t vocab_;
  std::size_t dim_;
};

struct EmbeddingTrainingResult {
  EmbeddingModel model;
  std::vector<double> epoch_loss;  // mean BCE over the dataset after each epoch
};

/// Adam over shuffled mini-batches. Throws Error if fewer than two classes are present.
EmbeddingTrainingResult train_embeddings(const std::vector<LabelledSequence>& dataset, const EmbeddingConfig& cfg);

/// "address,e0,...,e{D-1}" header plus one row per contract, values at 17 significant digits.
std::string export_embeddings_csv(const std::vector<ContractEmbedding>& embeddings, std::size_t dim);
std::vector<ContractEmbedding> import_embeddings_csv(std::string_view csv);

}  // namespace repute::embed

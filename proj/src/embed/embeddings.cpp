#include "repute/embed/embeddings.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "repute/common/format.hpp"
#include "repute/common/log.hpp"
#include "repute/nn/loss.hpp"
#include "repute/nn/optimizer.hpp"
#include "repute/nn/serialize.hpp"

namespace repute::embed {

ContractEmbedding embed_sequence(const evm::CategorySequence& seq, const EmbeddingTable& table) {
  ContractEmbedding out{seq.contract_address, std::vector<double>(table.dim(), 0.0)};
  if (seq.categories.empty()) {
    logger()->warn("empty opcode sequence for '{}'; using the zero embedding", seq.contract_address);
    return out;
  }
  for (auto id : seq.categories) {
    if (id >= table.vocab()) {
      throw Error("category id " + std::to_string(id) + " out of range for vocabulary of " +
                  std::to_string(table.vocab()));
    }
    const auto row = table.rows.row(id);
    for (std::size_t d = 0; d < out.vector.size(); ++d) out.vector[d] += row[d];
  }
  const double n = static_cast<double>(seq.categories.size());
  for (auto& v : out.vector) v /= n;
  return out;
}

std::vector<double> category_frequencies(const evm::CategorySequence& seq, std::size_t vocab) {
  std::vector<double> f(vocab, 0.0);
  for (auto id : seq.categories) {
    if (id >= vocab) throw Error("category id " + std::to_string(id) + " out of range");
    f[id] += 1.0;
  }
  if (!seq.categories.empty()) {
    for (auto& v : f) v /= static_cast<double>(seq.categories.size());
  }
  return f;
}

EmbeddingModel::EmbeddingModel(const EmbeddingConfig& cfg)
    : net_(nn::Shape{cfg.vocab}), vocab_(cfg.vocab), dim_(cfg.dim) {
  net_.emplace<nn::Dense>(cfg.vocab, cfg.dim, false);
  net_.emplace<nn::Dense>(cfg.dim, 1);
  net_.emplace<nn::Sigmoid>();
  net_.init(cfg.seed);
}

EmbeddingModel::EmbeddingModel(nn::Network network) : net_(std::move(network)) {
  if (net_.size() != 3 || net_.layer(0).kind() != nn::LayerKind::Dense) {
    throw Error("embedding model: unexpected network layout");
  }
  const auto& table_layer = static_cast<const nn::Dense&>(net_.layer(0));
  vocab_ = table_layer.in();
  dim_ = table_layer.out();
}

EmbeddingTable EmbeddingModel::table() const {
  const auto& w = static_cast<const nn::Dense&>(net_.layer(0)).weight().value;  // [D, V]
  EmbeddingTable t{Matrix(vocab_, dim_), {}};
  for (std::size_t v = 0; v < vocab_; ++v) {
    for (std::size_t d = 0; d < dim_; ++d) t.rows(v, d) = w[d * vocab_ + v];
  }
  const auto& names = evm::category_names();
  for (std::size_t v = 0; v < vocab_; ++v) {
    t.category_names.push_back(v < names.size() ? std::string(names[v]) : "c" + std::to_string(v));
  }
  return t;
}

double EmbeddingModel::predict(const evm::CategorySequence& seq) const {
  return net_.infer(nn::Tensor({vocab_}, category_frequencies(seq, vocab_)))[0];
}

void EmbeddingModel::save(const std::filesystem::path& path, std::uint64_t seed) const {
  nlohmann::ordered_json meta;
  meta["model"] = "opcode-embedding";
  meta["vocab"] = vocab_;
  meta["dim"] = dim_;
  meta["seed"] = seed;
  nn::save_network(path, net_, meta);
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  return EmbeddingModel(nn::load_network(path).network);
}

EmbeddingTrainingResult train_embeddings(const std::vector<LabelledSequence>& dataset, const EmbeddingConfig& cfg) {
  std::set<int> classes;
  for (const auto& s : dataset) classes.insert(s.label);
  if (classes.size() < 2) throw Error("train_embeddings: need both classes, got " + std::to_string(classes.size()));
  if (cfg.batch_size == 0) throw ConfigError("embedding.batch_size", "must be positive");

  EmbeddingModel model(cfg);
  auto& net = model.network();
  std::vector<nn::Tensor> inputs;
  std::vector<nn::Tensor> targets;
  for (const auto& s : dataset) {
    inputs.emplace_back(nn::Shape{cfg.vocab}, category_frequencies(s.sequence, cfg.vocab));
    targets.emplace_back(nn::Shape{1}, std::vector<double>{s.label ? 1.0 : 0.0});
  }

  nn::Adam adam(cfg.learning_rate);
  const auto params = net.params();
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      net.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const auto i = order[b];
        const auto out = net.forward(inputs[i]);
        auto g = nn::bce_grad(targets[i], out);
        for (auto& v : g.data()) v *= scale;
        net.backward(g);
      }
      adam.step(params);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) loss += nn::bce_loss(targets[i], net.infer(inputs[i]));
    history.push_back(loss / static_cast<double>(inputs.size()));
  }
  return {std::move(model), std::move(history)};
}

std::string export_embeddings_csv(const std::vector<ContractEmbedding>& embeddings, std::size_t dim) {
  std::ostringstream out;
  out << "address";
  for (std::size_t d = 0; d < dim; ++d) out << ",e" << d;
  out << '\n';
  for (const auto& e : embeddings) {
    if (e.vector.size() != dim) throw ShapeError("export_embeddings_csv: vector width mismatch");
    out << e.contract_address;
    for (double v : e.vector) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::vector<ContractEmbedding> import_embeddings_csv(std::string_view csv) {
  std::vector<ContractEmbedding> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t width = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (header) {
      if (cols.empty() || cols[0] != "address") throw ParseError("embedding CSV: missing address header", 0);
      width = cols.size() - 1;
      header = false;
      continue;
    }
    if (cols.size() != width + 1) throw ParseError("embedding CSV: ragged row for " + cols[0], 0);
    ContractEmbedding e{cols[0], {}};
    for (std::size_t d = 1; d < cols.size(); ++d) e.vector.push_back(parse_double(cols[d]));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace repute::embed

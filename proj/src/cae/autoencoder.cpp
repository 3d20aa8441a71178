#include "repute/cae/autoencoder.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/common/log.hpp"
#include "repute/kernels/parallel_map.hpp"
#include "repute/nn/loss.hpp"
#include "repute/nn/optimizer.hpp"
#include "repute/nn/serialize.hpp"

namespace repute::cae {

std::string_view variant_name(Variant v) {
  return v == Variant::TransactionOnly ? "transaction_only" : "multimodal";
}

Variant parse_variant(std::string_view s) {
  if (s == "transaction_only" || s == "transaction-only") return Variant::TransactionOnly;
  if (s == "multimodal") return Variant::Multimodal;
  throw ConfigError("cae.variant", "unknown variant '" + std::string(s) + "'");
}

std::size_t CaeConfig::channels() const {
  return features + (variant == Variant::Multimodal ? projection_width : 0);
}

void CaeConfig::validate() const {
  if (window == 0 || window % 4 != 0) throw ConfigError("cae.window", "must be a positive multiple of 4");
  if (features == 0) throw ConfigError("cae.features", "must be >= 1");
  if (variant == Variant::Multimodal) {
    if (embedding_dim == 0) throw ConfigError("cae.embedding_dim", "must be >= 1");
    if (projection_width == 0) throw ConfigError("cae.projection_width", "must be >= 1");
  }
  if (conv1_channels == 0 || conv2_channels == 0 || bottleneck == 0) {
    throw ConfigError("cae.bottleneck", "layer widths must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("cae.learning_rate", "must be > 0");
  if (batch_size == 0) throw ConfigError("cae.batch_size", "must be >= 1");
}

nlohmann::ordered_json CaeConfig::to_json() const {
  return {{"window", window},
          {"features", features},
          {"variant", variant_name(variant)},
          {"embedding_dim", embedding_dim},
          {"projection_width", projection_width},
          {"conv1_channels", conv1_channels},
          {"conv2_channels", conv2_channels},
          {"bottleneck", bottleneck},
          {"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed}};
}

CaeConfig CaeConfig::from_json(const nlohmann::json& j) {
  CaeConfig c;
  c.window = j.value("window", c.window);
  c.features = j.value("features", c.features);
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.projection_width = j.value("projection_width", c.projection_width);
  c.conv1_channels = j.value("conv1_channels", c.conv1_channels);
  c.conv2_channels = j.value("conv2_channels", c.conv2_channels);
  c.bottleneck = j.value("bottleneck", c.bottleneck);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  return c;
}

const std::vector<double>& embedding_for(const EmbeddingLookup& lookup, std::string_view address) {
  const auto it = lookup.find(address);
  if (it == lookup.end()) throw Error("no embedding for contract " + std::string(address));
  return it->second;
}

nn::Network make_autoencoder(const CaeConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels();
  const std::size_t l2 = cfg.window / 4;
  nn::Network net(nn::Shape{cfg.window, c});
  net.emplace<nn::Conv1D>(c, cfg.conv1_channels, 3, 2, 1);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Conv1D>(cfg.conv1_channels, cfg.conv2_channels, 3, 2, 1);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Flatten>();
  net.emplace<nn::Dense>(l2 * cfg.conv2_channels, cfg.bottleneck);
  net.emplace<nn::Dense>(cfg.bottleneck, l2 * cfg.conv2_channels);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Reshape>(nn::Shape{l2, cfg.conv2_channels});
  net.emplace<nn::Upsample1D>(2);
  net.emplace<nn::Conv1D>(cfg.conv2_channels, cfg.conv1_channels, 3, 1, 1);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Upsample1D>(2);
  net.emplace<nn::Conv1D>(cfg.conv1_channels, c, 3, 1, 1);
  return net;
}

nn::Tensor fuse(const Matrix& window, std::span<const double> projected) {
  const std::size_t f = window.cols();
  const std::size_t c = f + projected.size();
  nn::Tensor out({window.rows(), c});
  for (std::size_t t = 0; t < window.rows(); ++t) {
    const auto row = window.row(t);
    std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(t * c));
    std::copy(projected.begin(), projected.end(), out.data().begin() + static_cast<std::ptrdiff_t>(t * c + f));
  }
  return out;
}

AutoencoderModel::AutoencoderModel(const CaeConfig& cfg) : cfg_(cfg), ae_(make_autoencoder(cfg)) {
  ae_.init(cfg.seed);
  if (cfg.variant == Variant::Multimodal) {
    nn::Network p(nn::Shape{cfg.embedding_dim});
    p.emplace<nn::Dense>(cfg.embedding_dim, cfg.projection_width);
    p.init(cfg.seed + 1);
    projection_ = std::move(p);
  }
}

AutoencoderModel::AutoencoderModel(CaeConfig cfg, nn::Network autoencoder, std::optional<nn::Network> projection)
    : cfg_(std::move(cfg)), ae_(std::move(autoencoder)), projection_(std::move(projection)) {
  cfg_.validate();
  if (ae_.input_shape() != nn::Shape{cfg_.window, cfg_.channels()} ||
      ae_.output_shape() != ae_.input_shape()) {
    throw ShapeError("autoencoder shape does not match its config");
  }
  if ((cfg_.variant == Variant::Multimodal) != projection_.has_value()) {
    throw Error("multimodal autoencoder requires exactly one projection network");
  }
}

nn::Tensor AutoencoderModel::prepare(const Matrix& window, std::span<const double> embedding) const {
  if (window.rows() != cfg_.window || window.cols() != cfg_.features) {
    throw ShapeError("autoencoder expects a " + std::to_string(cfg_.window) + "x" + std::to_string(cfg_.features) +
                     " window, got " + std::to_string(window.rows()) + "x" + std::to_string(window.cols()));
  }
  if (!projection_) return nn::Tensor({window.rows(), window.cols()}, window.data());
  if (embedding.size() != cfg_.embedding_dim) {
    throw ShapeError("multimodal autoencoder expects a " + std::to_string(cfg_.embedding_dim) +
                     "-d embedding, got " + std::to_string(embedding.size()));
  }
  const nn::Tensor projected =
      projection_->infer(nn::Tensor({embedding.size()}, std::vector<double>(embedding.begin(), embedding.end())));
  return fuse(window, projected.span());
}

double AutoencoderModel::reconstruction_error(const Matrix& window, std::span<const double> embedding) const {
  const nn::Tensor x = prepare(window, embedding);
  return nn::mse_loss(x, ae_.infer(x));
}

std::vector<double> AutoencoderModel::latent(const Matrix& window, std::span<const double> embedding) const {
  return ae_.infer_prefix(prepare(window, embedding), kBottleneckLayer).data();
}

std::vector<nn::Param*> AutoencoderModel::params() {
  auto p = ae_.params();
  if (projection_) {
    for (auto* q : projection_->params()) p.push_back(q);
  }
  return p;
}

void AutoencoderModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["cae_config"] = cfg_.to_json();
  nn::save_network(path, ae_, meta);
  if (projection_) {
    auto proj_path = path;
    proj_path += ".projection";
    nn::save_network(proj_path, *projection_, meta);
  }
}

AutoencoderModel AutoencoderModel::load(const std::filesystem::path& path) {
  auto loaded = nn::load_network(path);
  const CaeConfig cfg = CaeConfig::from_json(loaded.meta.at("cae_config"));
  std::optional<nn::Network> projection;
  if (cfg.variant == Variant::Multimodal) {
    auto proj_path = path;
    proj_path += ".projection";
    projection = nn::load_network(proj_path).network;
  }
  return AutoencoderModel(cfg, std::move(loaded.network), std::move(projection));
}

double accumulate_window_gradients(AutoencoderModel& model, const Matrix& window, std::span<const double> embedding,
                                   double scale) {
  const auto& cfg = model.config();
  if (!model.multimodal()) {
    const nn::Tensor x = model.prepare(window);
    const nn::Tensor y = model.autoencoder().forward(x);
    nn::Tensor g = nn::mse_grad(x, y);
    for (auto& v : g.data()) v *= scale;
    model.autoencoder().backward(g);
    return nn::mse_loss(x, y);
  }
  if (embedding.size() != cfg.embedding_dim) throw ShapeError("multimodal window needs a matching embedding");
  const nn::Tensor projected = model.projection().forward(
      nn::Tensor({embedding.size()}, std::vector<double>(embedding.begin(), embedding.end())));
  const nn::Tensor x = fuse(window, projected.span());
  const nn::Tensor y = model.autoencoder().forward(x);
  nn::Tensor g = nn::mse_grad(x, y);
  for (auto& v : g.data()) v *= scale;
  const nn::Tensor g_in = model.autoencoder().backward(g);
  // d/dx of mse(x, ae(x)) = (input path) - (output gradient), since the target is x itself.
  const std::size_t c = cfg.channels();
  nn::Tensor g_proj({cfg.projection_width});
  for (std::size_t t = 0; t < cfg.window; ++t) {
    for (std::size_t j = 0; j < cfg.projection_width; ++j) {
      const std::size_t k = t * c + cfg.features + j;
      g_proj[j] += g_in[k] - g[k];
    }
  }
  model.projection().backward(g_proj);
  return nn::mse_loss(x, y);
}

nn::Objective window_objective(AutoencoderModel& model, const std::vector<Matrix>& windows,
                               const std::vector<std::vector<double>>& embeddings) {
  auto emb = [&embeddings](std::size_t i) {
    return embeddings.empty() ? std::span<const double>{} : std::span<const double>(embeddings[i]);
  };
  nn::Objective obj;
  obj.value = [&model, &windows, emb] {
    double sum = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) sum += model.reconstruction_error(windows[i], emb(i));
    return sum / static_cast<double>(windows.size());
  };
  obj.accumulate_gradients = [&model, &windows, emb] {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      accumulate_window_gradients(model, windows[i], emb(i), 1.0 / static_cast<double>(windows.size()));
    }
  };
  return obj;
}

namespace {

std::vector<std::span<const double>> resolve_embeddings(const AutoencoderModel& model,
                                                        const std::vector<features::WindowTensor>& windows,
                                                        const EmbeddingLookup& embeddings) {
  std::vector<std::span<const double>> out(windows.size());
  if (!model.multimodal()) return out;
  for (std::size_t i = 0; i < windows.size(); ++i) out[i] = embedding_for(embeddings, windows[i].contract_address);
  return out;
}

}  // namespace

CaeTrainingResult train_cae(const std::vector<features::WindowTensor>& windows, std::span<const ingest::Label> labels,
                            const EmbeddingLookup& embeddings, const CaeConfig& cfg) {
  cfg.validate();
  if (labels.size() != windows.size()) throw ShapeError("train_cae: one label per window required");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (labels[i] == ingest::Label::Illicit) {
      throw Error("train_cae: training set contains an illicit window from " + windows[i].contract_address);
    }
  }
  if (windows.empty()) throw Error("train_cae: no training windows");

  CaeTrainingResult result{AutoencoderModel(cfg), {}, {}};
  auto& model = result.model;
  const auto emb = resolve_embeddings(model, windows, embeddings);
  const auto params = model.params();
  nn::Adam adam(cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed ^ 0xcae0cae0cae0cae0ULL);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto* p : params) p->grad.fill(0.0);
      for (std::size_t b = start; b < end; ++b) {
        total += accumulate_window_gradients(model, windows[order[b]].window, emb[order[b]], scale);
      }
      adam.step(params);
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
    if ((epoch + 1) % 50 == 0 || epoch + 1 == cfg.epochs) {
      logger()->debug("cae[{}] epoch {}: loss {}", variant_name(cfg.variant), epoch + 1, result.epoch_loss.back());
    }
  }
  result.training_errors = omp::score_windows(model, windows, embeddings);
  return result;
}

std::vector<double> serial::score_windows(const AutoencoderModel& model,
                                          const std::vector<features::WindowTensor>& windows,
                                          const EmbeddingLookup& embeddings) {
  const auto emb = resolve_embeddings(model, windows, embeddings);
  return kernels::serial::map_indexed(windows.size(),
                                      [&](std::size_t i) { return model.reconstruction_error(windows[i].window, emb[i]); });
}

std::vector<double> omp::score_windows(const AutoencoderModel& model, const std::vector<features::WindowTensor>& windows,
                                       const EmbeddingLookup& embeddings) {
  const auto emb = resolve_embeddings(model, windows, embeddings);
  return kernels::omp::map_indexed(windows.size(),
                                   [&](std::size_t i) { return model.reconstruction_error(windows[i].window, emb[i]); });
}

}  // namespace repute::cae

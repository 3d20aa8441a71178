#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "repute/augment/augmentation.hpp"
#include "repute/nn/loss.hpp"
#include "repute/nn/optimizer.hpp"
#include "repute/nn/serialize.hpp"

namespace repute::augment {
namespace {

nn::Tensor noise(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Tensor z({dim});
  for (auto& v : z.data()) v = normal(rng);
  return z;
}

}  // namespace

nn::Network make_generator(std::size_t noise_dim, const std::vector<std::size_t>& hidden, std::size_t out_dim) {
  nn::Network g(nn::Shape{noise_dim});
  std::size_t width = noise_dim;
  for (std::size_t h : hidden) {
    g.emplace<nn::Dense>(width, h);
    g.emplace<nn::ReLU>();
    width = h;
  }
  g.emplace<nn::Dense>(width, out_dim);
  return g;
}

nn::Network make_discriminator(std::size_t in_dim, const std::vector<std::size_t>& hidden) {
  nn::Network d(nn::Shape{in_dim});
  std::size_t width = in_dim;
  for (std::size_t h : hidden) {
    d.emplace<nn::Dense>(width, h);
    d.emplace<nn::ReLU>();
    width = h;
  }
  d.emplace<nn::Dense>(width, 1);
  d.emplace<nn::Sigmoid>();
  return d;
}

Matrix Generator::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Matrix out(0, mean.size());
  std::vector<double> row(mean.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = network.infer(noise(noise_dim, rng));
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = y[j] * scale[j] + mean[j];
    out.append_row(row);
  }
  return out;
}

void Generator::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json meta;
  meta["model"] = "gan-generator";
  meta["noise_dim"] = noise_dim;
  meta["mean"] = mean;
  meta["scale"] = scale;
  nn::save_network(path, network, meta);
}

Generator Generator::load(const std::filesystem::path& path) {
  auto loaded = nn::load_network(path);
  Generator g;
  g.network = std::move(loaded.network);
  g.noise_dim = loaded.meta.at("noise_dim").get<std::size_t>();
  g.mean = loaded.meta.at("mean").get<std::vector<double>>();
  g.scale = loaded.meta.at("scale").get<std::vector<double>>();
  return g;
}

GanTrainingResult train_gan(const Matrix& minority, const AugmentationConfig& cfg) {
  const GanParams& p = cfg.gan;
  if (p.batch_size == 0) throw ConfigError("augmentation.gan.batch_size", "must be positive");
  if (minority.rows() < p.batch_size) {
    throw Error("train_gan: minority has " + std::to_string(minority.rows()) + " rows, fewer than batch size " +
                std::to_string(p.batch_size));
  }
  const std::size_t n = minority.rows();
  const std::size_t dim = minority.cols();

  // Per-dimension z-scoring; constant dimensions keep unit scale.
  std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += minority(i, j);
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) scale[j] += (minority(i, j) - mean[j]) * (minority(i, j) - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;
  }
  std::vector<nn::Tensor> real;
  real.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    nn::Tensor t({dim});
    for (std::size_t j = 0; j < dim; ++j) t[j] = (minority(i, j) - mean[j]) / scale[j];
    real.push_back(std::move(t));
  }

  GanTrainingResult result;
  nn::Network gen = make_generator(p.noise_dim, p.generator_hidden, dim);
  nn::Network disc = make_discriminator(dim, p.discriminator_hidden);
  gen.init(cfg.seed);
  disc.init(cfg.seed + 1);
  nn::Adam gen_opt(p.learning_rate);
  nn::Adam disc_opt(p.learning_rate);
  const auto gen_params = gen.params();
  const auto disc_params = disc.params();

  std::mt19937_64 rng(cfg.seed + 2);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const nn::Tensor one({1}, std::vector<double>{1.0});
  const nn::Tensor zero({1}, std::vector<double>{0.0});
  std::size_t low_loss_run = 0;

  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start + p.batch_size <= n; start += p.batch_size) {
      const double scale_d = 1.0 / static_cast<double>(2 * p.batch_size);
      const double scale_g = 1.0 / static_cast<double>(p.batch_size);

      // Discriminator: real -> 1, fake -> 0.
      disc.zero_grad();
      double d_loss = 0.0;
      for (std::size_t b = 0; b < p.batch_size; ++b) {
        const auto out = disc.forward(real[order[start + b]]);
        d_loss += nn::bce_loss(one, out);
        auto g = nn::bce_grad(one, out);
        g[0] *= scale_d;
        disc.backward(g);
      }
      for (std::size_t b = 0; b < p.batch_size; ++b) {
        const auto fake = gen.infer(noise(p.noise_dim, rng));
        const auto out = disc.forward(fake);
        d_loss += nn::bce_loss(zero, out);
        auto g = nn::bce_grad(zero, out);
        g[0] *= scale_d;
        disc.backward(g);
      }
      disc_opt.step(disc_params);
      d_loss *= scale_d;
      result.discriminator_loss.push_back(d_loss);

      // Generator: non-saturating loss -log D(G(z)).
      gen.zero_grad();
      double g_loss = 0.0;
      for (std::size_t b = 0; b < p.batch_size; ++b) {
        const auto fake = gen.forward(noise(p.noise_dim, rng));
        const auto out = disc.forward(fake);
        g_loss += nn::bce_loss(one, out);
        auto g = nn::bce_grad(one, out);
        g[0] *= scale_g;
        gen.backward(disc.backward(g));
      }
      gen_opt.step(gen_params);
      result.generator_loss.push_back(g_loss * scale_g);

      low_loss_run = d_loss < p.collapse_loss ? low_loss_run + 1 : 0;
      if (low_loss_run >= p.collapse_patience) {
        throw GanDivergedError(fmt::format(
            "GAN training halted at epoch {} step {}: discriminator loss below {} for {} consecutive steps "
            "(last D loss {:.3g}, last G loss {:.3g}); the generator is no longer receiving useful gradient",
            epoch, result.discriminator_loss.size(), p.collapse_loss, p.collapse_patience, d_loss,
            result.generator_loss.back()));
      }
    }
  }
  // Gradients accumulated in disc during generator steps are discarded by the next zero_grad.
  disc.zero_grad();
  result.generator = Generator{std::move(gen), p.noise_dim, std::move(mean), std::move(scale)};
  result.discriminator = std::move(disc);
  return result;
}

}  // namespace repute::augment

#include "repute/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"

namespace repute::pipeline {
namespace fs = std::filesystem;
namespace {

using json = nlohmann::json;

// Typed access to one JSON object with dotted field paths in every error.
class Reader {
 public:
  Reader(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  bool has(const char* key) const { return j_ && j_->contains(key); }

  template <typename T>
  T get(const char* key, T fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_->at(key);
    try {
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ConfigError(field(key), "expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  Reader child(const char* key) const { return Reader(has(key) ? &j_->at(key) : nullptr, field(key)); }
  const json* raw(const char* key) const { return has(key) ? &j_->at(key) : nullptr; }

  void allow_only(std::initializer_list<std::string_view> known) const {
    if (!j_) return;
    for (const auto& [k, _] : j_->items()) {
      if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError(field(k), "unknown field");
    }
  }

 private:
  const json* j_;
  std::string path_;
};

template <typename T>
std::vector<T> list(const Reader& r, const char* key, std::vector<T> fallback) {
  const json* v = r.raw(key);
  if (!v) return fallback;
  if (!v->is_array() || v->empty()) throw ConfigError(r.field(key), "expected a non-empty array");
  try {
    return v->get<std::vector<T>>();
  } catch (const json::exception&) {
    throw ConfigError(r.field(key), "has an element of the wrong type");
  }
}

std::optional<augment::Method> parse_optional_method(const std::string& s, const std::string& field) {
  if (s == "none") return std::nullopt;
  try {
    return augment::parse_method(s);
  } catch (const Error&) {
    throw ConfigError(field, "unknown method '" + s + "' (none, smote, adasyn, gan)");
  }
}

}  // namespace

std::string method_label(const std::optional<augment::Method>& m) {
  if (!m) return "none";
  std::string s(augment::method_name(*m));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed_override) {
  PipelineConfig c;
  const Reader root(&j, "");
  root.allow_only({"seed", "output_dir", "dataset", "split", "embedding", "augmentation", "gbdt", "features", "cae",
                   "thresholds"});
  if (seed_override) {
    c.seed = *seed_override;
  } else if (root.has("seed")) {
    c.seed = root.get<std::uint64_t>("seed", 0);
  } else {
    throw ConfigError("seed", "is required");
  }
  c.output_dir = root.get<std::string>("output_dir", c.output_dir.string());

  const Reader ds = root.child("dataset");
  ds.allow_only({"fixture_dir", "fetch"});
  c.dataset.fixture_dir = ds.get<std::string>("fixture_dir", "");
  const Reader fetch = ds.child("fetch");
  fetch.allow_only({"addresses", "labels_csv", "base_url", "requests_per_second"});
  if (ds.has("fetch")) {
    c.dataset.fetch_addresses = list<std::string>(fetch, "addresses", {});
    c.dataset.labels_csv = fetch.get<std::string>("labels_csv", "");
    c.dataset.etherscan_base_url = fetch.get<std::string>("base_url", c.dataset.etherscan_base_url);
    c.dataset.requests_per_second = fetch.get<double>("requests_per_second", c.dataset.requests_per_second);
    if (!(c.dataset.requests_per_second > 0)) throw ConfigError(fetch.field("requests_per_second"), "must be > 0");
    if (c.dataset.fetch_addresses.empty()) throw ConfigError(fetch.field("addresses"), "must not be empty");
    if (c.dataset.labels_csv.empty()) throw ConfigError(fetch.field("labels_csv"), "is required");
    if (!fs::exists(c.dataset.labels_csv)) throw ConfigError(fetch.field("labels_csv"), "file does not exist");
  }
  if (c.dataset.fixture_dir.empty() == c.dataset.fetch_addresses.empty()) {
    throw ConfigError("dataset", "set exactly one of fixture_dir or fetch");
  }
  if (!c.dataset.fixture_dir.empty() && !fs::is_directory(c.dataset.fixture_dir)) {
    throw ConfigError("dataset.fixture_dir", "directory does not exist: " + c.dataset.fixture_dir.string());
  }

  const Reader split = root.child("split");
  split.allow_only({"test_fraction"});
  c.test_fraction = split.get<double>("test_fraction", c.test_fraction);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("split.test_fraction", "must be in (0, 1)");

  const Reader em = root.child("embedding");
  em.allow_only({"dim", "learning_rate", "epochs", "batch_size"});
  c.embedding.dim = em.get<std::size_t>("dim", c.embedding.dim);
  c.embedding.learning_rate = em.get<double>("learning_rate", c.embedding.learning_rate);
  c.embedding.epochs = em.get<std::size_t>("epochs", c.embedding.epochs);
  c.embedding.batch_size = em.get<std::size_t>("batch_size", c.embedding.batch_size);
  if (c.embedding.dim == 0) throw ConfigError("embedding.dim", "must be >= 1");
  if (!(c.embedding.learning_rate > 0)) throw ConfigError("embedding.learning_rate", "must be > 0");
  if (c.embedding.batch_size == 0) throw ConfigError("embedding.batch_size", "must be >= 1");
  c.embedding.seed = c.embedding_seed();

  const Reader au = root.child("augmentation");
  au.allow_only({"method", "target_count", "k_neighbors", "gan"});
  c.augmentation.method = parse_optional_method(au.get<std::string>("method", "gan"), "augmentation.method");
  c.augmentation.target_count = au.get<std::size_t>("target_count", 0);
  c.augmentation.k_neighbors = au.get<std::size_t>("k_neighbors", c.augmentation.k_neighbors);
  if (c.augmentation.k_neighbors == 0) throw ConfigError("augmentation.k_neighbors", "must be >= 1");
  const Reader gan = au.child("gan");
  gan.allow_only({"noise_dim", "generator_hidden", "discriminator_hidden", "learning_rate", "epochs", "batch_size",
                  "collapse_patience", "collapse_loss"});
  auto& g = c.augmentation.gan;
  g.noise_dim = gan.get<std::size_t>("noise_dim", g.noise_dim);
  g.generator_hidden = list<std::size_t>(gan, "generator_hidden", g.generator_hidden);
  g.discriminator_hidden = list<std::size_t>(gan, "discriminator_hidden", g.discriminator_hidden);
  g.learning_rate = gan.get<double>("learning_rate", g.learning_rate);
  g.epochs = gan.get<std::size_t>("epochs", g.epochs);
  g.batch_size = gan.get<std::size_t>("batch_size", g.batch_size);
  g.collapse_patience = gan.get<std::size_t>("collapse_patience", g.collapse_patience);
  g.collapse_loss = gan.get<double>("collapse_loss", g.collapse_loss);
  if (g.noise_dim == 0) throw ConfigError("augmentation.gan.noise_dim", "must be >= 1");
  if (g.batch_size == 0) throw ConfigError("augmentation.gan.batch_size", "must be >= 1");
  if (!(g.learning_rate > 0)) throw ConfigError("augmentation.gan.learning_rate", "must be > 0");

  const Reader gb = root.child("gbdt");
  gb.allow_only({"folds", "grid", "compare"});
  c.gbdt.folds = gb.get<std::size_t>("folds", c.gbdt.folds);
  if (c.gbdt.folds < 2) throw ConfigError("gbdt.folds", "must be >= 2");
  const Reader grid = gb.child("grid");
  grid.allow_only({"learning_rates", "max_depths", "n_estimators", "subsamples", "reg_alphas", "reg_lambdas",
                   "min_samples_leaf", "n_bins"});
  auto& gs = c.gbdt.grid;
  gs.learning_rates = list<double>(grid, "learning_rates", gs.learning_rates);
  gs.max_depths = list<std::size_t>(grid, "max_depths", gs.max_depths);
  gs.n_estimators = list<std::size_t>(grid, "n_estimators", gs.n_estimators);
  gs.subsamples = list<double>(grid, "subsamples", gs.subsamples);
  gs.reg_alphas = list<double>(grid, "reg_alphas", gs.reg_alphas);
  gs.reg_lambdas = list<double>(grid, "reg_lambdas", gs.reg_lambdas);
  gs.base.min_samples_leaf = grid.get<std::size_t>("min_samples_leaf", gs.base.min_samples_leaf);
  gs.base.n_bins = grid.get<std::size_t>("n_bins", gs.base.n_bins);
  gs.base.seed = c.gbdt_seed();
  try {
    for (const auto& hp : gs.expand()) hp.validate();
  } catch (const ConfigError& e) {
    std::string name = e.field().substr(e.field().find('.') + 1);
    if (name != "n_estimators" && name != "n_bins" && name != "min_samples_leaf") name += "s";
    throw ConfigError("gbdt.grid." + name, e.reason());
  }
  if (gb.has("compare")) {
    c.gbdt.compare.clear();
    for (const auto& s : list<std::string>(gb, "compare", {})) {
      c.gbdt.compare.push_back(parse_optional_method(s, "gbdt.compare"));
    }
  }

  const Reader fe = root.child("features");
  fe.allow_only({"window", "stride", "outlier_k", "outlier_mode"});
  c.features.window = fe.get<std::size_t>("window", c.features.window);
  c.features.stride = fe.get<std::size_t>("stride", c.features.stride);
  c.features.outlier_k = fe.get<double>("outlier_k", c.features.outlier_k);
  const auto mode = fe.get<std::string>("outlier_mode", "global");
  if (mode == "global") c.features.outlier_mode = features::OutlierMode::Global;
  else if (mode == "per_contract") c.features.outlier_mode = features::OutlierMode::PerContract;
  else throw ConfigError("features.outlier_mode", "expected 'global' or 'per_contract'");
  if (c.features.stride == 0) throw ConfigError("features.stride", "must be >= 1");
  if (!(c.features.outlier_k > 0)) throw ConfigError("features.outlier_k", "must be > 0");

  const Reader ca = root.child("cae");
  ca.allow_only({"variants", "projection_width", "conv1_channels", "conv2_channels", "bottleneck", "learning_rate",
                 "epochs", "batch_size"});
  if (ca.has("variants")) {
    c.cae_variants.clear();
    for (const auto& s : list<std::string>(ca, "variants", {})) {
      try {
        c.cae_variants.push_back(cae::parse_variant(s));
      } catch (const ConfigError&) {
        throw ConfigError("cae.variants", "unknown variant '" + s + "'");
      }
    }
  }
  c.cae.window = c.features.window;
  c.cae.embedding_dim = c.embedding.dim;
  c.cae.projection_width = ca.get<std::size_t>("projection_width", c.cae.projection_width);
  c.cae.conv1_channels = ca.get<std::size_t>("conv1_channels", c.cae.conv1_channels);
  c.cae.conv2_channels = ca.get<std::size_t>("conv2_channels", c.cae.conv2_channels);
  c.cae.bottleneck = ca.get<std::size_t>("bottleneck", c.cae.bottleneck);
  c.cae.learning_rate = ca.get<double>("learning_rate", c.cae.learning_rate);
  c.cae.epochs = ca.get<std::size_t>("epochs", c.cae.epochs);
  c.cae.batch_size = ca.get<std::size_t>("batch_size", c.cae.batch_size);
  c.cae.seed = c.cae_seed();
  try {
    for (auto v : c.cae_variants) {
      auto probe = c.cae;
      probe.variant = v;
      probe.validate();
    }
  } catch (const ConfigError& e) {
    // The window lives under features; everything else under cae.
    throw ConfigError(e.field() == "cae.window" ? "features.window" : e.field(), e.reason());
  }

  const Reader th = root.child("thresholds");
  th.allow_only({"percentiles", "primary"});
  c.thresholds.percentiles = list<double>(th, "percentiles", c.thresholds.percentiles);
  c.thresholds.primary = th.get<double>("primary", c.thresholds.primary);
  for (double p : c.thresholds.percentiles) {
    if (!(p >= 75.0 && p <= 90.0)) throw ConfigError("thresholds.percentiles", "values must be in [75, 90]");
  }
  if (!(c.thresholds.primary >= 75.0 && c.thresholds.primary <= 90.0)) {
    throw ConfigError("thresholds.primary", "must be in [75, 90]");
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  return from_json(j, seed_override);
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  auto& ds = j["dataset"];
  if (!dataset.fixture_dir.empty()) ds["fixture_dir"] = dataset.fixture_dir.string();
  if (!dataset.fetch_addresses.empty()) {
    ds["fetch"] = {{"addresses", dataset.fetch_addresses},
                   {"labels_csv", dataset.labels_csv.string()},
                   {"base_url", dataset.etherscan_base_url},
                   {"requests_per_second", dataset.requests_per_second}};
  }
  j["split"] = {{"test_fraction", test_fraction}};
  j["embedding"] = {{"dim", embedding.dim},
                    {"learning_rate", embedding.learning_rate},
                    {"epochs", embedding.epochs},
                    {"batch_size", embedding.batch_size}};
  const auto& g = augmentation.gan;
  j["augmentation"] = {{"method", method_label(augmentation.method)},
                       {"target_count", augmentation.target_count},
                       {"k_neighbors", augmentation.k_neighbors},
                       {"gan",
                        {{"noise_dim", g.noise_dim},
                         {"generator_hidden", g.generator_hidden},
                         {"discriminator_hidden", g.discriminator_hidden},
                         {"learning_rate", g.learning_rate},
                         {"epochs", g.epochs},
                         {"batch_size", g.batch_size},
                         {"collapse_patience", g.collapse_patience},
                         {"collapse_loss", g.collapse_loss}}}};
  std::vector<std::string> compare;
  for (const auto& m : gbdt.compare) compare.push_back(method_label(m));
  const auto& gs = gbdt.grid;
  nlohmann::ordered_json grid = {{"learning_rates", gs.learning_rates}, {"max_depths", gs.max_depths},
                                 {"n_estimators", gs.n_estimators},     {"subsamples", gs.subsamples},
                                 {"reg_alphas", gs.reg_alphas},         {"reg_lambdas", gs.reg_lambdas},
                                 {"min_samples_leaf", gs.base.min_samples_leaf}, {"n_bins", gs.base.n_bins}};
  j["gbdt"] = {{"folds", gbdt.folds}, {"grid", grid}, {"compare", compare}};
  j["features"] = {{"window", features.window},
                   {"stride", features.stride},
                   {"outlier_k", features.outlier_k},
                   {"outlier_mode", features.outlier_mode == features::OutlierMode::Global ? "global" : "per_contract"}};
  std::vector<std::string> variants;
  for (auto v : cae_variants) variants.emplace_back(cae::variant_name(v));
  auto cae_json = cae.to_json();
  // Derived from features, embedding and seed.
  for (const char* k : {"variant", "window", "features", "embedding_dim", "seed"}) cae_json.erase(k);
  cae_json["variants"] = variants;
  j["cae"] = cae_json;
  j["thresholds"] = {{"percentiles", thresholds.percentiles}, {"primary", thresholds.primary}};
  return j;
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json().dump()); }

}  // namespace repute::pipeline

#include "repute/gbdt/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/kernels/parallel_map.hpp"

namespace repute::gbdt {
namespace {

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void check_training_data(const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw ShapeError("gbdt::fit: X has " + std::to_string(x.rows()) + " rows, y has " +
                                             std::to_string(y.size()));
  if (x.rows() < 2) throw Error("gbdt::fit: need at least 2 rows");
  if (x.cols() == 0) throw ShapeError("gbdt::fit: no features");
  std::set<int> classes;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error("gbdt::fit: labels must be 0 or 1");
    classes.insert(v);
  }
  if (classes.size() < 2) throw Error("gbdt::fit: y contains a single class");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error("gbdt::fit: non-finite feature value");
  }
}

struct Grower {
  const Matrix& x;
  const kernels::BinnedMatrix& binned;
  const BinMapper& mapper;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const GbdtHyperparams& hp;
  std::size_t n_bins;
  Tree tree;

  int grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += grad[r];
      h += hess[r];
    }
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, -soft_threshold(g, hp.reg_alpha) / (h + hp.reg_lambda)});
    if (depth >= hp.max_depth || rows.size() < 2 * std::max<std::size_t>(1, hp.min_samples_leaf)) return index;

    const auto hist = kernels::omp::build_histograms(binned, rows, grad, hess, n_bins);
    const SplitCandidate split = best_split(hist, hp.reg_alpha, hp.reg_lambda, hp.min_samples_leaf);
    if (split.feature < 0) return index;

    const auto f = static_cast<std::size_t>(split.feature);
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (binned.at(r, f) <= split.bin ? left : right).push_back(r);
    const double threshold = mapper.cuts[f][split.bin];
    const int l = grow(left, depth + 1);
    const int rt = grow(right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = threshold;
    node.left = l;
    node.right = rt;
    return index;
  }
};

}  // namespace

void GbdtHyperparams::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("gbdt.learning_rate", "must be > 0");
  if (max_depth < 1 || max_depth > 16) throw ConfigError("gbdt.max_depth", "must be in [1, 16]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("gbdt.subsample", "must be in (0, 1]");
  if (reg_alpha < 0.0) throw ConfigError("gbdt.reg_alpha", "must be >= 0");
  if (reg_lambda < 0.0) throw ConfigError("gbdt.reg_lambda", "must be >= 0");
  if (n_bins < 2 || n_bins > 65535) throw ConfigError("gbdt.n_bins", "must be in [2, 65535]");
}

nlohmann::ordered_json GbdtHyperparams::to_json() const {
  return {{"learning_rate", learning_rate}, {"max_depth", max_depth},   {"subsample", subsample},
          {"reg_alpha", reg_alpha},         {"reg_lambda", reg_lambda}, {"n_estimators", n_estimators},
          {"min_samples_leaf", min_samples_leaf}, {"n_bins", n_bins},   {"seed", seed}};
}

GbdtHyperparams GbdtHyperparams::from_json(const nlohmann::json& j) {
  GbdtHyperparams hp;
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.max_depth = j.value("max_depth", hp.max_depth);
  hp.subsample = j.value("subsample", hp.subsample);
  hp.reg_alpha = j.value("reg_alpha", hp.reg_alpha);
  hp.reg_lambda = j.value("reg_lambda", hp.reg_lambda);
  hp.n_estimators = j.value("n_estimators", hp.n_estimators);
  hp.min_samples_leaf = j.value("min_samples_leaf", hp.min_samples_leaf);
  hp.n_bins = j.value("n_bins", hp.n_bins);
  hp.seed = j.value("seed", hp.seed);
  return hp;
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

double BoostedModel::margin(std::span<const double> row, std::optional<std::size_t> n_trees) const {
  const std::size_t use = std::min(trees.size(), n_trees.value_or(trees.size()));
  double sum = 0.0;
  for (std::size_t t = 0; t < use; ++t) sum += trees[t].predict(row);
  return base_score + hyperparams.learning_rate * sum;
}

nlohmann::ordered_json BoostedModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "repute-gbdt/1";
  j["base_score"] = base_score;
  j["n_features"] = n_features;
  j["hyperparams"] = hyperparams.to_json();
  auto trees_json = nlohmann::ordered_json::array();
  for (const auto& t : trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                       {"right", n.right}, {"value", n.value}});
    }
    trees_json.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees_json);
  j["train_log_loss"] = train_log_loss;
  return j;
}

BoostedModel BoostedModel::from_json(const nlohmann::json& j) {
  BoostedModel m;
  m.base_score = j.at("base_score").get<double>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.hyperparams = GbdtHyperparams::from_json(j.at("hyperparams"));
  for (const auto& t : j.at("trees")) {
    Tree tree;
    for (const auto& n : t.at("nodes")) {
      tree.nodes.push_back(TreeNode{n.at("feature").get<int>(), n.at("threshold").get<double>(),
                                    n.at("left").get<int>(), n.at("right").get<int>(), n.at("value").get<double>()});
    }
    m.trees.push_back(std::move(tree));
  }
  m.train_log_loss = j.value("train_log_loss", std::vector<double>{});
  return m;
}

BinMapper BinMapper::fit(const Matrix& x, std::size_t n_bins) {
  BinMapper m;
  m.cuts.resize(x.cols());
  std::vector<double> col(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, f);
    std::sort(col.begin(), col.end());
    std::vector<double> distinct;
    std::unique_copy(col.begin(), col.end(), std::back_inserter(distinct));
    auto& cuts = m.cuts[f];
    if (distinct.size() <= n_bins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        cuts.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
      }
      continue;
    }
    for (std::size_t b = 1; b < n_bins; ++b) {
      const std::size_t idx = std::min(col.size() - 1, b * col.size() / n_bins);
      const auto next = std::upper_bound(distinct.begin(), distinct.end(), col[idx]);
      if (next == distinct.end()) continue;
      const double cut = col[idx] + (*next - col[idx]) / 2.0;
      if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
    }
  }
  return m;
}

kernels::BinnedMatrix BinMapper::transform(const Matrix& x) const {
  if (x.cols() != cuts.size()) throw ShapeError("BinMapper: feature count mismatch");
  kernels::BinnedMatrix b{x.rows(), x.cols(), std::vector<std::uint16_t>(x.rows() * x.cols())};
  for (std::size_t f = 0; f < x.cols(); ++f) {
    const auto& c = cuts[f];
    for (std::size_t i = 0; i < x.rows(); ++i) {
      b.bins[f * x.rows() + i] =
          static_cast<std::uint16_t>(std::lower_bound(c.begin(), c.end(), x(i, f)) - c.begin());
    }
  }
  return b;
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double split_score(double g, double h, double alpha, double lambda) {
  const double t = soft_threshold(g, alpha);
  return t * t / (h + lambda);
}

bool improves(double gain, double best) { return gain > best + kGainTieTolerance * std::max(1.0, std::abs(best)); }

SplitCandidate best_split(const std::vector<kernels::FeatureHistogram>& hist, double alpha, double lambda,
                          std::size_t min_samples_leaf) {
  SplitCandidate best;
  if (hist.empty()) return best;
  const std::size_t msl = std::max<std::size_t>(1, min_samples_leaf);
  // Parent totals from feature 0; every feature's histogram covers the same rows.
  double g_total = 0.0, h_total = 0.0;
  std::size_t n_total = 0;
  for (std::size_t b = 0; b < hist[0].grad.size(); ++b) {
    g_total += hist[0].grad[b];
    h_total += hist[0].hess[b];
    n_total += hist[0].count[b];
  }
  const double parent = split_score(g_total, h_total, alpha, lambda);
  double best_gain = 0.0;
  for (std::size_t f = 0; f < hist.size(); ++f) {
    const auto& hf = hist[f];
    double gl = 0.0, hl = 0.0;
    std::size_t nl = 0;
    for (std::size_t b = 0; b + 1 < hf.grad.size(); ++b) {
      gl += hf.grad[b];
      hl += hf.hess[b];
      nl += hf.count[b];
      if (hf.count[b] == 0) continue;  // same partition as the previous bin
      const std::size_t nr = n_total - nl;
      if (nl < msl || nr < msl) continue;
      const double gain = split_score(gl, hl, alpha, lambda) + split_score(g_total - gl, h_total - hl, alpha, lambda) -
                          parent;
      if (improves(gain, best_gain)) {
        best_gain = gain;
        best = SplitCandidate{static_cast<int>(f), b, gain};
      }
    }
  }
  return best;
}

double log_loss(std::span<const int> y, std::span<const double> p) {
  if (y.size() != p.size()) throw ShapeError("log_loss: length mismatch");
  if (y.empty()) throw Error("log_loss: empty input");
  constexpr double kClip = 1e-15;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], kClip, 1.0 - kClip);
    sum += y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return -sum / static_cast<double>(y.size());
}

BoostedModel fit(const Matrix& x, std::span<const int> y, const GbdtHyperparams& hp) {
  hp.validate();
  check_training_data(x, y);
  const std::size_t n = x.rows();

  BoostedModel model;
  model.hyperparams = hp;
  model.n_features = x.cols();
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double prior = pos / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  const BinMapper mapper = BinMapper::fit(x, hp.n_bins);
  const kernels::BinnedMatrix binned = mapper.transform(x);
  std::size_t n_bins = 1;
  for (const auto& c : mapper.cuts) n_bins = std::max(n_bins, c.size() + 1);

  std::vector<double> margin(n, model.base_score), prob(n), grad(n), hess(n);
  auto record_loss = [&] {
    for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(margin[i]);
    model.train_log_loss.push_back(log_loss(y, prob));
  };
  record_loss();

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(n))));

  for (std::size_t t = 0; t < hp.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = prob[i] - y[i];
      hess[i] = prob[i] * (1.0 - prob[i]);
    }
    std::vector<std::size_t> rows = all;
    if (sample_size < n) {
      std::mt19937_64 rng(hp.seed * 0x9e3779b97f4a7c15ULL + t);
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(sample_size);
      std::sort(rows.begin(), rows.end());
    }
    Grower grower{x, binned, mapper, grad, hess, hp, n_bins, {}};
    grower.grow(rows, 0);
    for (std::size_t i = 0; i < n; ++i) margin[i] += hp.learning_rate * grower.tree.predict(x.row(i));
    model.trees.push_back(std::move(grower.tree));
    record_loss();
  }
  return model;
}

std::vector<double> predict_proba(const BoostedModel& model, const Matrix& x, std::optional<std::size_t> n_trees) {
  if (x.cols() != model.n_features) {
    throw ShapeError("predict_proba: model expects " + std::to_string(model.n_features) + " features, got " +
                     std::to_string(x.cols()));
  }
  return kernels::omp::map_indexed(x.rows(), [&](std::size_t i) { return sigmoid(model.margin(x.row(i), n_trees)); });
}

std::string training_report_csv(const BoostedModel& model) {
  std::string out = "round,train_log_loss\n";
  for (std::size_t r = 0; r < model.train_log_loss.size(); ++r) {
    out += std::to_string(r) + "," + format_double(model.train_log_loss[r]) + "\n";
  }
  return out;
}

}  // namespace repute::gbdt

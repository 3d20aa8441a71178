#include "repute/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "repute/cae/autoencoder.hpp"
#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/common/log.hpp"
#include "repute/embed/embeddings.hpp"
#include "repute/eval/metrics.hpp"
#include "repute/evm/disassembler.hpp"
#include "repute/features/tx_features.hpp"
#include "repute/gbdt/gbdt.hpp"
#include "repute/ingest/etherscan_client.hpp"
#include "repute/ingest/fixture.hpp"

namespace repute::pipeline {
namespace fs = std::filesystem;
namespace {

// ---- file helpers ----

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifactError(p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, std::string_view content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto& l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) out.push_back(std::move(l));
  }
  return out;
}

int label_value(ingest::Label l) { return l == ingest::Label::Illicit ? 1 : 0; }

// ---- artifact readers ----

std::vector<ingest::ContractRecord> read_contracts(const fs::path& p) {
  std::vector<ingest::ContractRecord> out;
  for (const auto& line : lines_of(read_text(p))) {
    const auto j = nlohmann::json::parse(line);
    auto c = ingest::contract_from_json(j);
    c.label = ingest::parse_label(j.at("label").get<std::string>());
    out.push_back(std::move(c));
  }
  return out;
}

std::map<std::string, ingest::Label, std::less<>> read_labels(const fs::path& contracts_path) {
  std::map<std::string, ingest::Label, std::less<>> out;
  for (const auto& line : lines_of(read_text(contracts_path))) {
    const auto j = nlohmann::json::parse(line);
    out[j.at("address").get<std::string>()] = ingest::parse_label(j.at("label").get<std::string>());
  }
  return out;
}

Split read_split(const fs::path& p) {
  const auto j = nlohmann::json::parse(read_text(p));
  return Split{j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>()};
}

cae::EmbeddingLookup read_embeddings(const fs::path& p) {
  cae::EmbeddingLookup out;
  for (auto& e : embed::import_embeddings_csv(read_text(p))) out[e.contract_address] = std::move(e.vector);
  return out;
}

std::vector<features::WindowTensor> read_windows(const fs::path& p) {
  std::vector<features::WindowTensor> out;
  for (const auto& line : lines_of(read_text(p))) out.push_back(features::tensor_from_json_line(line));
  return out;
}

struct WindowError {
  std::string address;
  std::int64_t start_hour = 0;
  double error = 0.0;
};

std::string window_errors_csv(const std::vector<features::WindowTensor>& windows, const std::vector<double>& errors) {
  std::string out = "address,start_hour,error\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out += fmt::format("{},{},{}\n", windows[i].contract_address, windows[i].start_hour, format_double(errors[i]));
  }
  return out;
}

std::vector<WindowError> read_window_errors(const fs::path& p) {
  std::vector<WindowError> out;
  const auto lines = lines_of(read_text(p));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 3) throw ParseError(p.string() + ": malformed line " + std::to_string(i + 1), i);
    out.push_back({f[0], std::stoll(f[1]), parse_double(f[2])});
  }
  return out;
}

std::vector<double> errors_only(const std::vector<WindowError>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.error);
  return out;
}

std::vector<eval::ContractErrors> group_errors(const std::vector<WindowError>& rows,
                                               const std::map<std::string, ingest::Label, std::less<>>& labels) {
  std::vector<eval::ContractErrors> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : rows) {
    auto [it, inserted] = slot.try_emplace(r.address, out.size());
    if (inserted) out.push_back({r.address, {}, label_value(labels.at(r.address))});
    out[it->second].errors.push_back(r.error);
  }
  return out;
}

std::string variant_file(cae::Variant v, std::string_view suffix) {
  return std::string(cae::variant_name(v)) + std::string(suffix);
}

bool needs_embeddings(const PipelineConfig& cfg) {
  return std::find(cfg.cae_variants.begin(), cfg.cae_variants.end(), cae::Variant::Multimodal) !=
         cfg.cae_variants.end();
}

// Labelled embedding rows for the given addresses, in order.
void embedding_rows(const std::vector<std::string>& addresses, const cae::EmbeddingLookup& emb,
                    const std::map<std::string, ingest::Label, std::less<>>& labels, Matrix& x, std::vector<int>& y,
                    std::vector<std::string>* kept = nullptr) {
  for (const auto& a : addresses) {
    const auto l = labels.at(a);
    if (l == ingest::Label::Unlabelled) continue;
    const auto& v = cae::embedding_for(emb, a);
    if (x.rows() == 0) x = Matrix(0, v.size());
    x.append_row(v);
    y.push_back(label_value(l));
    if (kept) kept->push_back(a);
  }
}

constexpr const char* kContracts = "ingest/contracts.jsonl";
constexpr const char* kSplit = "ingest/split.json";
constexpr const char* kCategories = "disasm/categories.jsonl";
constexpr const char* kEmbeddings = "embed/embeddings.csv";
constexpr const char* kTrainWindows = "features/train_windows.jsonl";
constexpr const char* kEvalWindows = "features/eval_windows.jsonl";
constexpr const char* kPredictions = "gbdt/predictions.csv";

}  // namespace

const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order = {"ingest",      "disasm",    "embed", "augment",  "train-gbdt",
                                                 "tx-features", "train-cae", "score", "evaluate", "sweep"};
  return order;
}

Split stratified_split(const std::vector<ingest::ContractRecord>& contracts, double test_fraction,
                       std::uint64_t seed) {
  Split s;
  std::mt19937_64 rng(seed);
  for (auto label : {ingest::Label::Reputable, ingest::Label::Illicit}) {
    std::vector<std::string> group;
    for (const auto& c : contracts)
      if (c.label == label) group.push_back(c.address);
    std::sort(group.begin(), group.end());
    std::shuffle(group.begin(), group.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group.size())));
    if (group.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, group.size() - 1);
    s.test.insert(s.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test), group.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Matrix synthesize(const Matrix& minority, const Matrix& majority, augment::Method method,
                  const AugmentSettings& settings, std::uint64_t seed) {
  const std::size_t target =
      settings.target_count > 0 ? settings.target_count : std::max(majority.rows(), minority.rows());
  if (target <= minority.rows()) return Matrix(0, minority.cols());
  augment::AugmentationConfig cfg{method, target, settings.k_neighbors, seed, settings.gan};
  switch (method) {
    case augment::Method::SMOTE:
    case augment::Method::ADASYN: {
      if (minority.rows() < 2) {
        logger()->warn("{}: need at least 2 minority rows, got {}; skipping", augment::method_name(method),
                       minority.rows());
        return Matrix(0, minority.cols());
      }
      if (cfg.k_neighbors >= minority.rows()) {
        cfg.k_neighbors = minority.rows() - 1;
        logger()->debug("{}: k reduced to {} for {} minority rows", augment::method_name(method), cfg.k_neighbors,
                        minority.rows());
      }
      return method == augment::Method::SMOTE ? augment::smote(minority, cfg).samples
                                              : augment::adasyn(minority, majority, cfg).samples;
    }
    case augment::Method::GAN: {
      if (minority.rows() < cfg.gan.batch_size) {
        cfg.gan.batch_size = minority.rows();
        logger()->debug("GAN: batch reduced to {} minority rows", cfg.gan.batch_size);
      }
      const auto trained = augment::train_gan(minority, cfg);
      return trained.generator.sample(target - minority.rows(), seed + 1);
    }
  }
  return Matrix(0, minority.cols());
}

std::pair<Matrix, std::vector<int>> augment_training_set(const Matrix& x, const std::vector<int>& y,
                                                         const std::optional<augment::Method>& method,
                                                         const AugmentSettings& settings, std::uint64_t seed) {
  if (!method) return {x, y};
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
  const Matrix synthetic = synthesize(x.select_rows(pos), x.select_rows(neg), *method, settings, seed);
  std::vector<int> labels = y;
  labels.insert(labels.end(), synthetic.rows(), 1);
  return {Matrix::vstack(x, synthetic), std::move(labels)};
}

// ---- stage runner ----

struct Pipeline::StageSpec {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  void (Pipeline::*body)();
};

Pipeline::Pipeline(PipelineConfig cfg, fs::path out, bool force)
    : cfg_(std::move(cfg)), out_(std::move(out)), force_(force), hash_(cfg_.hash()) {}

Pipeline::StageSpec Pipeline::spec(std::string_view stage) const {
  std::vector<std::string> per_variant;
  auto each_variant = [&](std::string_view prefix, std::initializer_list<std::string_view> suffixes) {
    std::vector<std::string> out;
    for (auto v : cfg_.cae_variants)
      for (auto s : suffixes) out.push_back(std::string(prefix) + variant_file(v, s));
    return out;
  };
  if (stage == "ingest") return {{}, {kContracts, kSplit}, &Pipeline::ingest};
  if (stage == "disasm") return {{kContracts}, {kCategories}, &Pipeline::disasm};
  if (stage == "embed") {
    return {{kContracts, kSplit, kCategories},
            {"embed/table.model", "embed/table.csv", kEmbeddings, "embed/training_loss.csv"},
            &Pipeline::embed};
  }
  if (stage == "augment") {
    return {{kContracts, kSplit, kEmbeddings}, {"augment/synthetic.csv", "augment/quality.json"}, &Pipeline::augment};
  }
  if (stage == "train-gbdt") {
    return {{kContracts, kSplit, kEmbeddings},
            {"gbdt/model.json", "gbdt/cv.csv", "gbdt/training_report.csv", kPredictions, "gbdt/metrics.csv"},
            &Pipeline::train_gbdt};
  }
  if (stage == "tx-features") {
    return {{kContracts, kSplit},
            {"features/hourly.csv", "features/standardizer.json", "features/outliers.json", kTrainWindows,
             kEvalWindows},
            &Pipeline::tx_features};
  }
  if (stage == "train-cae") {
    std::vector<std::string> in = {kContracts, kTrainWindows};
    if (needs_embeddings(cfg_)) in.push_back(kEmbeddings);
    return {in, each_variant("cae/", {".model", "_training_errors.csv", "_loss.csv"}), &Pipeline::train_cae};
  }
  if (stage == "score") {
    std::vector<std::string> in = {kContracts, kEvalWindows};
    if (needs_embeddings(cfg_)) in.push_back(kEmbeddings);
    for (auto& s : each_variant("cae/", {".model", "_training_errors.csv"})) in.push_back(s);
    return {in,
            each_variant("score/", {"_window_errors.csv", "_reports.jsonl", "_latents.csv", "_contract_latents.csv",
                                    "_projection.csv"}),
            &Pipeline::score};
  }
  if (stage == "evaluate") {
    std::vector<std::string> in = {kContracts, kPredictions};
    for (auto& s : each_variant("score/", {"_reports.jsonl", "_window_errors.csv"})) in.push_back(s);
    return {in, {"evaluate/metrics.csv", "evaluate/metrics.md", "evaluate/reconstruction.csv"}, &Pipeline::evaluate};
  }
  if (stage == "sweep") {
    std::vector<std::string> in = {kContracts};
    for (auto& s : each_variant("cae/", {"_training_errors.csv"})) in.push_back(s);
    for (auto& s : each_variant("score/", {"_window_errors.csv"})) in.push_back(s);
    return {in, {"sweep/sweep.csv", "sweep/sweep.md"}, &Pipeline::sweep};
  }
  throw ConfigError("stage", "unknown stage '" + std::string(stage) + "'");
}

bool Pipeline::run(std::string_view stage) {
  const StageSpec s = spec(stage);
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& in : s.inputs) {
    const fs::path p = out_ / in;
    if (!fs::exists(p)) throw MissingArtifactError(p.string());
    inputs[in] = sha256_hex(read_text(p));
  }
  const fs::path manifest_path = out_ / std::string(stage) / "manifest.json";
  if (!force_ && fs::exists(manifest_path)) {
    const auto old = nlohmann::ordered_json::parse(read_text(manifest_path));
    const bool outputs_present =
        std::all_of(s.outputs.begin(), s.outputs.end(), [&](const auto& o) { return fs::exists(out_ / o); });
    if (old.value("config_hash", "") == hash_ && old.value("inputs", nlohmann::ordered_json::object()) == inputs &&
        outputs_present) {
      logger()->info("{}: up to date", stage);
      return false;
    }
  }
  logger()->info("{}: running", stage);
  write_text(out_ / "config.json", cfg_.to_json().dump(2) + "\n");
  for (const auto& o : s.outputs) fs::create_directories((out_ / o).parent_path());
  (this->*s.body)();

  nlohmann::ordered_json manifest;
  manifest["stage"] = stage;
  manifest["format_version"] = 1;
  manifest["config_hash"] = hash_;
  manifest["seed"] = cfg_.seed;
  manifest["inputs"] = inputs;
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
  for (const auto& o : s.outputs) {
    const fs::path p = out_ / o;
    if (!fs::exists(p)) throw Error(std::string(stage) + ": expected output " + p.string() + " was not written");
    outputs[o] = sha256_hex(read_text(p));
  }
  manifest["outputs"] = outputs;
  write_text(manifest_path, manifest.dump(2) + "\n");
  return true;
}

void Pipeline::run_all() {
  for (const auto& s : stage_order()) run(s);
}

void Pipeline::ingest() {
  std::vector<ingest::ContractRecord> contracts;
  if (!cfg_.dataset.fixture_dir.empty()) {
    contracts = ingest::load_fixture_dir(cfg_.dataset.fixture_dir);
  } else {
    ingest::EtherscanConfig ec;
    ec.base_url = cfg_.dataset.etherscan_base_url;
    ec.api_key = ingest::api_key_from_env();
    ec.requests_per_second = cfg_.dataset.requests_per_second;
    if (ec.api_key.empty()) logger()->warn("ETHERSCAN_API_KEY is not set; requests may be throttled");
    ingest::EtherscanClient client(ec);
    contracts = client.fetch_many(cfg_.dataset.fetch_addresses);
    // Labels come from the same sidecar format as fixture directories.
    std::map<std::string, ingest::Label> labels;
    for (const auto& line : lines_of(read_text(cfg_.dataset.labels_csv))) {
      const auto cols = split(line, ',');
      if (cols.size() != 2 || cols[0] == "address") continue;
      labels[ingest::normalize_address(cols[0])] = ingest::parse_label(cols[1]);
    }
    for (auto& c : contracts) {
      const auto it = labels.find(c.address);
      if (it == labels.end()) logger()->warn("no label for {}; treating as unlabelled", c.address);
      c.label = it == labels.end() ? ingest::Label::Unlabelled : it->second;
    }
    std::sort(contracts.begin(), contracts.end(), [](const auto& a, const auto& b) { return a.address < b.address; });
  }
  if (contracts.empty()) throw Error("ingest: dataset contains no contracts");

  std::string jsonl;
  for (const auto& c : contracts) {
    auto j = ingest::contract_to_json(c);
    j["label"] = ingest::label_name(c.label);
    jsonl += j.dump() + "\n";
  }
  write_text(out_ / kContracts, jsonl);
  const Split split = stratified_split(contracts, cfg_.test_fraction, cfg_.split_seed());
  nlohmann::ordered_json sj;
  sj["config_hash"] = hash_;
  sj["seed"] = cfg_.split_seed();
  sj["test_fraction"] = cfg_.test_fraction;
  sj["train"] = split.train;
  sj["test"] = split.test;
  write_text(out_ / kSplit, sj.dump(2) + "\n");
}

void Pipeline::disasm() {
  std::string out;
  for (const auto& c : read_contracts(out_ / kContracts)) {
    const auto ops = evm::disassemble(c.bytecode);
    if (std::any_of(ops.begin(), ops.end(), [](const auto& o) { return o.truncated; })) {
      logger()->warn("{}: bytecode ends inside a PUSH immediate", c.address);
    }
    out += evm::to_json_line(evm::simplify(ops, c.address)) + "\n";
  }
  write_text(out_ / kCategories, out);
}

void Pipeline::embed() {
  const auto labels = read_labels(out_ / kContracts);
  const Split split = read_split(out_ / kSplit);
  std::map<std::string, evm::CategorySequence> seqs;
  for (const auto& line : lines_of(read_text(out_ / kCategories))) {
    auto s = evm::category_sequence_from_json_line(line);
    seqs[s.contract_address] = std::move(s);
  }
  std::vector<embed::LabelledSequence> train;
  for (const auto& a : split.train) {
    if (labels.at(a) == ingest::Label::Unlabelled) continue;
    train.push_back({seqs.at(a), label_value(labels.at(a))});
  }
  const auto result = embed::train_embeddings(train, cfg_.embedding);
  const auto table = result.model.table();
  result.model.save(out_ / "embed/table.model", cfg_.embedding.seed);

  std::string table_csv = "category";
  for (std::size_t d = 0; d < table.dim(); ++d) table_csv += ",e" + std::to_string(d);
  table_csv += "\n";
  for (std::size_t v = 0; v < table.vocab(); ++v) {
    table_csv += table.category_names[v];
    for (double x : table.rows.row(v)) table_csv += "," + format_double(x);
    table_csv += "\n";
  }
  write_text(out_ / "embed/table.csv", table_csv);

  std::vector<embed::ContractEmbedding> all;
  for (const auto& [address, seq] : seqs) all.push_back(embed::embed_sequence(seq, table));
  write_text(out_ / kEmbeddings, embed::export_embeddings_csv(all, table.dim()));

  std::string loss = "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    loss += std::to_string(e + 1) + "," + format_double(result.epoch_loss[e]) + "\n";
  }
  write_text(out_ / "embed/training_loss.csv", loss);
}

void Pipeline::augment() {
  const auto labels = read_labels(out_ / kContracts);
  const Split split = read_split(out_ / kSplit);
  const auto emb = read_embeddings(out_ / kEmbeddings);
  Matrix x;
  std::vector<int> y;
  embedding_rows(split.train, emb, labels, x, y);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
  const Matrix minority = x.select_rows(pos);
  const Matrix majority = x.select_rows(neg);
  const auto& method = cfg_.augmentation.method;
  const Matrix synthetic = method ? synthesize(minority, majority, *method, cfg_.augmentation, cfg_.augment_seed())
                                  : Matrix(0, minority.cols());
  write_text(out_ / "augment/synthetic.csv",
             augment::provenance_csv(minority, synthetic, method.value_or(augment::Method::GAN)));
  nlohmann::ordered_json q;
  q["config_hash"] = hash_;
  q["method"] = method_label(method);
  q["real_rows"] = minority.rows();
  q["majority_rows"] = majority.rows();
  q["synthetic_rows"] = synthetic.rows();
  q["quality"] = synthetic.rows() > 1 ? augment::quality_metrics(minority, synthetic).to_json() : nlohmann::ordered_json();
  write_text(out_ / "augment/quality.json", q.dump(2) + "\n");
}

void Pipeline::train_gbdt() {
  const auto labels = read_labels(out_ / kContracts);
  const Split split = read_split(out_ / kSplit);
  const auto emb = read_embeddings(out_ / kEmbeddings);
  Matrix x_train, x_test;
  std::vector<int> y_train, y_test;
  std::vector<std::string> test_addresses;
  embedding_rows(split.train, emb, labels, x_train, y_train);
  embedding_rows(split.test, emb, labels, x_test, y_test, &test_addresses);

  const auto& settings = cfg_.augmentation;
  const auto primary = settings.method;
  const std::uint64_t aug_seed = cfg_.augment_seed();
  gbdt::FoldAugmenter augmenter;
  if (primary) {
    augmenter = [&](const Matrix& fx, const std::vector<int>& fy, std::size_t fold) {
      return augment_training_set(fx, fy, primary, settings, aug_seed + 1000 * (fold + 1));
    };
  }
  const auto grid = cfg_.gbdt.grid.expand();
  const auto cv = gbdt::grid_search_cv(x_train, y_train, grid, cfg_.gbdt.folds, cfg_.gbdt_seed(), augmenter);
  write_text(out_ / "gbdt/cv.csv", cv.to_csv());
  const gbdt::GbdtHyperparams best = cv.best();

  auto methods = cfg_.gbdt.compare;
  if (std::find(methods.begin(), methods.end(), primary) == methods.end()) methods.push_back(primary);
  std::string predictions = "method,address,label,probability\n";
  std::vector<eval::NamedMetrics> rows;
  for (const auto& m : methods) {
    const auto [xa, ya] = augment_training_set(x_train, y_train, m, settings, aug_seed);
    const auto model = gbdt::fit(xa, ya, best);
    const auto p = gbdt::predict_proba(model, x_test);
    std::vector<int> pred;
    for (std::size_t i = 0; i < p.size(); ++i) {
      pred.push_back(p[i] >= 0.5 ? 1 : 0);
      predictions += fmt::format("{},{},{},{}\n", method_label(m), test_addresses[i], y_test[i], format_double(p[i]));
    }
    rows.push_back({"gbdt_" + method_label(m), eval::compute_metrics(y_test, pred, std::span<const double>(p))});
    if (m == primary) {
      nlohmann::ordered_json j;
      j["config_hash"] = hash_;
      j["augmentation"] = method_label(m);
      j["training_rows"] = xa.rows();
      j["model"] = model.to_json();
      write_text(out_ / "gbdt/model.json", j.dump() + "\n");
      write_text(out_ / "gbdt/training_report.csv", gbdt::training_report_csv(model));
    }
  }
  write_text(out_ / kPredictions, predictions);
  write_text(out_ / "gbdt/metrics.csv", eval::metrics_csv(rows));
}

void Pipeline::tx_features() {
  const auto contracts = read_contracts(out_ / kContracts);
  const Split split = read_split(out_ / kSplit);
  const std::set<std::string> train(split.train.begin(), split.train.end());
  const std::set<std::string> test(split.test.begin(), split.test.end());

  std::vector<features::HourlyWindow> all, pool;
  std::map<std::string, std::vector<features::HourlyWindow>> eval_hours;
  for (const auto& c : contracts) {
    auto hourly = features::aggregate_hourly(c.address, ingest::merge_transactions(c));
    if (hourly.empty()) {
      logger()->warn("{}: no transactions; no windows", c.address);
      continue;
    }
    all.insert(all.end(), hourly.begin(), hourly.end());
    if (c.label == ingest::Label::Reputable && train.count(c.address)) {
      pool.insert(pool.end(), hourly.begin(), hourly.end());
    } else if (c.label == ingest::Label::Illicit || (c.label == ingest::Label::Reputable && test.count(c.address))) {
      // Illicit contracts never train the autoencoder, so all of them are evaluated.
      eval_hours[c.address] = std::move(hourly);
    }
  }
  write_text(out_ / "features/hourly.csv", features::windows_to_csv(all, true));
  if (pool.empty()) throw Error("tx-features: no reputable training hours");

  const auto kept = features::remove_outlier_windows(pool, cfg_.features.outlier_k, cfg_.features.outlier_mode);
  const auto standardizer = features::Standardizer::fit(kept);
  auto sj = standardizer.to_json();
  sj["config_hash"] = hash_;
  write_text(out_ / "features/standardizer.json", sj.dump(2) + "\n");
  nlohmann::ordered_json oj;
  oj["config_hash"] = hash_;
  oj["k"] = cfg_.features.outlier_k;
  oj["mode"] = cfg_.features.outlier_mode == features::OutlierMode::Global ? "global" : "per_contract";
  oj["pool_hours"] = pool.size();
  oj["removed_hours"] = pool.size() - kept.size();
  write_text(out_ / "features/outliers.json", oj.dump(2) + "\n");

  auto emit = [&](const std::vector<features::HourlyWindow>& hours, std::string& out) {
    for (const auto& t : features::windowize(standardizer.apply(hours), cfg_.features.window, cfg_.features.stride)) {
      out += features::tensor_to_json_line(t) + "\n";
    }
  };
  std::string train_out, eval_out;
  std::map<std::string, std::vector<features::HourlyWindow>> by_contract;
  for (const auto& h : kept) by_contract[h.contract_address].push_back(h);
  for (const auto& [address, hours] : by_contract) emit(hours, train_out);
  for (const auto& [address, hours] : eval_hours) emit(hours, eval_out);
  write_text(out_ / kTrainWindows, train_out);
  write_text(out_ / kEvalWindows, eval_out);
}

void Pipeline::train_cae() {
  const auto labels = read_labels(out_ / kContracts);
  const auto windows = read_windows(out_ / kTrainWindows);
  const auto emb = needs_embeddings(cfg_) ? read_embeddings(out_ / kEmbeddings) : cae::EmbeddingLookup{};
  std::vector<ingest::Label> window_labels;
  for (const auto& w : windows) window_labels.push_back(labels.at(w.contract_address));
  for (auto v : cfg_.cae_variants) {
    auto cc = cfg_.cae;
    cc.variant = v;
    const auto result = cae::train_cae(windows, window_labels, emb, cc);
    result.model.save(out_ / "cae" / variant_file(v, ".model"));
    write_text(out_ / "cae" / variant_file(v, "_training_errors.csv"),
               window_errors_csv(windows, result.training_errors));
    std::string loss = "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      loss += std::to_string(e + 1) + "," + format_double(result.epoch_loss[e]) + "\n";
    }
    write_text(out_ / "cae" / variant_file(v, "_loss.csv"), loss);
  }
}

void Pipeline::score() {
  const auto windows = read_windows(out_ / kEvalWindows);
  const auto emb = needs_embeddings(cfg_) ? read_embeddings(out_ / kEmbeddings) : cae::EmbeddingLookup{};
  for (auto v : cfg_.cae_variants) {
    const auto model = cae::AutoencoderModel::load(out_ / "cae" / variant_file(v, ".model"));
    const auto errors = cae::omp::score_windows(model, windows, emb);
    write_text(out_ / "score" / variant_file(v, "_window_errors.csv"), window_errors_csv(windows, errors));

    const auto training = errors_only(read_window_errors(out_ / "cae" / variant_file(v, "_training_errors.csv")));
    const auto threshold = cae::fit_threshold(training, cfg_.thresholds.primary,
                                              "cae/" + variant_file(v, "_training_errors.csv"));
    std::string reports;
    for (const auto& r : cae::classify_contracts(windows, errors, threshold)) reports += r.to_json().dump() + "\n";
    write_text(out_ / "score" / variant_file(v, "_reports.jsonl"), reports);

    const auto latents = cae::export_latents(model, windows, emb);
    write_text(out_ / "score" / variant_file(v, "_latents.csv"),
               cae::matrix_csv(latents.window_addresses, latents.window_latents, "z"));
    write_text(out_ / "score" / variant_file(v, "_contract_latents.csv"),
               cae::matrix_csv(latents.contract_addresses, latents.contract_latents, "z"));
    const auto projection = cae::pca_2d(latents.contract_latents);
    write_text(out_ / "score" / variant_file(v, "_projection.csv"),
               cae::matrix_csv(latents.contract_addresses, projection.points, "pc"));
  }
}

void Pipeline::evaluate() {
  const auto labels = read_labels(out_ / kContracts);
  std::vector<eval::NamedMetrics> rows;

  // GBDT rows, one per compared oversampler, in file order.
  std::vector<std::string> method_order;
  std::map<std::string, std::vector<std::pair<int, double>>> by_method;
  const auto lines = lines_of(read_text(out_ / kPredictions));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 4) throw ParseError("predictions.csv: malformed line " + std::to_string(i + 1), i);
    if (!by_method.count(f[0])) method_order.push_back(f[0]);
    by_method[f[0]].emplace_back(std::stoi(f[2]), parse_double(f[3]));
  }
  for (const auto& m : method_order) {
    std::vector<int> truth, pred;
    std::vector<double> prob;
    for (const auto& [t, p] : by_method[m]) {
      truth.push_back(t);
      pred.push_back(p >= 0.5 ? 1 : 0);
      prob.push_back(p);
    }
    rows.push_back({"gbdt_" + m, eval::compute_metrics(truth, pred, std::span<const double>(prob))});
  }

  std::string recon = "variant,mean_error_illicit,mean_error_reputable,illicit_contracts,reputable_contracts\n";
  for (auto v : cfg_.cae_variants) {
    std::vector<int> truth, pred;
    for (const auto& line : lines_of(read_text(out_ / "score" / variant_file(v, "_reports.jsonl")))) {
      const auto r = cae::AnomalyReport::from_json(nlohmann::json::parse(line));
      truth.push_back(label_value(labels.at(r.contract_address)));
      pred.push_back(label_value(r.verdict));
    }
    rows.push_back({fmt::format("cae_{}_p{}", cae::variant_name(v), format_double(cfg_.thresholds.primary)),
                    eval::compute_metrics(truth, pred)});

    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    for (const auto& c : group_errors(read_window_errors(out_ / "score" / variant_file(v, "_window_errors.csv")), labels)) {
      double mean = 0.0;
      for (double e : c.errors) mean += e;
      sum[c.label] += mean / static_cast<double>(c.errors.size());
      ++n[c.label];
    }
    recon += fmt::format("{},{},{},{},{}\n", cae::variant_name(v), format_double(n[1] ? sum[1] / double(n[1]) : 0.0),
                         format_double(n[0] ? sum[0] / double(n[0]) : 0.0), n[1], n[0]);
  }
  write_text(out_ / "evaluate/metrics.csv", eval::metrics_csv(rows));
  write_text(out_ / "evaluate/metrics.md", "# Evaluation\n\n" + eval::metrics_markdown(rows));
  write_text(out_ / "evaluate/reconstruction.csv", recon);
}

void Pipeline::sweep() {
  const auto labels = read_labels(out_ / kContracts);
  std::vector<eval::VariantScores> variants;
  for (auto v : cfg_.cae_variants) {
    variants.push_back({std::string(cae::variant_name(v)),
                        errors_only(read_window_errors(out_ / "cae" / variant_file(v, "_training_errors.csv"))),
                        group_errors(read_window_errors(out_ / "score" / variant_file(v, "_window_errors.csv")), labels)});
  }
  const auto table = eval::threshold_sweep(variants, cfg_.thresholds.percentiles);
  write_text(out_ / "sweep/sweep.csv", table.to_csv());
  write_text(out_ / "sweep/sweep.md", "# Threshold sweep\n\n" + table.to_markdown());
}

}  // namespace repute::pipeline

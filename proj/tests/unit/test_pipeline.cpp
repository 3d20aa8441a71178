#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"
#include "repute/features/tx_features.hpp"
#include "repute/ingest/fixture.hpp"
#include "repute/pipeline/config.hpp"
#include "repute/pipeline/fixture_gen.hpp"
#include "repute/pipeline/stages.hpp"

using namespace repute;
using namespace repute::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("repute_pipeline_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_of(const nlohmann::json& j) {
  try {
    PipelineConfig::from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

// A fast configuration over a freshly generated fixture.
nlohmann::json quick_config(const fs::path& fixture) {
  auto j = nlohmann::json::parse(R"({
    "seed": 11,
    "embedding": {"dim": 8, "epochs": 10},
    "augmentation": {"gan": {"epochs": 20, "generator_hidden": [16], "discriminator_hidden": [16]}},
    "gbdt": {"folds": 3, "grid": {"learning_rates": [0.1], "max_depths": [2], "n_estimators": [20]}},
    "features": {"window": 8, "stride": 4},
    "cae": {"epochs": 2}
  })");
  j["dataset"] = {{"fixture_dir", fixture.string()}};
  return j;
}

fs::path make_small_fixture(const fs::path& dir) {
  FixtureParams fp;
  fp.n_reputable = 16;
  fp.n_illicit = 8;
  fp.seed = 3;
  fp.reputable_hours_min = 24;
  fp.reputable_hours_max = 36;
  fp.illicit_hours_min = 16;
  fp.illicit_hours_max = 24;
  write_fixture(dir, make_fixture(fp), fp);
  return dir;
}

}  // namespace

TEST(Config, ValidationNamesFieldPaths) {
  const auto dir = scratch("cfg");
  const nlohmann::json ok = {{"seed", 1}, {"dataset", {{"fixture_dir", dir.string()}}}};
  EXPECT_EQ(field_of(ok), "<accepted>");
  auto j = ok;
  j.erase("seed");
  EXPECT_EQ(field_of(j), "seed");
  j = ok;
  j["features"] = {{"window", 10}};
  EXPECT_EQ(field_of(j), "features.window");
  j = ok;
  j["cae"] = {{"epochs", -3}};
  EXPECT_EQ(field_of(j), "cae.epochs");
  j = ok;
  j["cae"] = {{"epoch", 3}};
  EXPECT_EQ(field_of(j), "cae.epoch");
  j = ok;
  j["gbdt"] = {{"grid", {{"learning_rates", {0.1, -1.0}}}}};
  EXPECT_EQ(field_of(j), "gbdt.grid.learning_rates");
  j = ok;
  j["dataset"]["fixture_dir"] = (dir / "missing").string();
  EXPECT_EQ(field_of(j), "dataset.fixture_dir");
  j = ok;
  j["augmentation"] = {{"method", "mixup"}};
  EXPECT_EQ(field_of(j), "augmentation.method");
  j = ok;
  j["thresholds"] = {{"percentiles", {70}}};
  EXPECT_EQ(field_of(j), "thresholds.percentiles");
  fs::remove_all(dir);
}

TEST(Config, SeedOverrideAndHash) {
  const auto dir = scratch("hash");
  nlohmann::json j = {{"dataset", {{"fixture_dir", dir.string()}}}};
  const auto c = PipelineConfig::from_json(j, 42);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.cae_seed(), 46u);
  j["seed"] = 42;
  j["output_dir"] = "elsewhere";
  const auto d = PipelineConfig::from_json(j);
  EXPECT_EQ(c.hash(), d.hash());
  j["seed"] = 43;
  EXPECT_NE(PipelineConfig::from_json(j).hash(), c.hash());
  auto effective = nlohmann::json::parse(c.to_json().dump());
  effective["dataset"] = {{"fixture_dir", dir.string()}};
  const auto reparsed = PipelineConfig::from_json(effective);
  EXPECT_EQ(reparsed.hash(), c.hash());
  EXPECT_THROW(PipelineConfig::load(dir / "nope.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(FixtureGen, DeterministicCountsAndLabels) {
  FixtureParams fp;
  fp.n_reputable = 20;
  fp.n_illicit = 5;
  const auto a = make_fixture(fp);
  EXPECT_EQ(a.size(), 25u);
  EXPECT_EQ(make_fixture(fp), a);
  std::size_t illicit = 0;
  for (const auto& c : a) illicit += c.label == ingest::Label::Illicit;
  EXPECT_EQ(illicit, 5u);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].address, a[i].address);

  const auto d1 = scratch("fx1"), d2 = scratch("fx2");
  write_fixture(d1, a, fp);
  write_fixture(d2, make_fixture(fp), fp);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(d2 / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 27u);  // 25 contracts, labels.csv, fixture_manifest.json
  EXPECT_EQ(ingest::load_fixture_dir(d1), a);
  fs::remove_all(d1);
  fs::remove_all(d2);
  fp.n_illicit = 0;
  EXPECT_THROW(fp.validate(), ConfigError);
}

TEST(FixtureGen, IllicitContractsHaveBursts) {
  for (std::uint64_t seed : {1u, 7u, 19u}) {
    FixtureParams fp;
    fp.n_reputable = 4;
    fp.n_illicit = 12;
    fp.seed = seed;
    for (const auto& c : make_fixture(fp)) {
      if (c.label != ingest::Label::Illicit) continue;
      const auto hours = features::aggregate_hourly(c.address, ingest::merge_transactions(c));
      std::vector<double> counts;
      for (const auto& h : hours) counts.push_back(h.features[features::kTxCount]);
      const double median = features::quantile(counts, 0.5);
      EXPECT_GT(*std::max_element(counts.begin(), counts.end()), 5 * median) << c.address;
    }
  }
}

TEST(Split, StratifiedAndSeeded) {
  FixtureParams fp;
  fp.n_reputable = 20;
  fp.n_illicit = 6;
  const auto contracts = make_fixture(fp);
  const auto s = stratified_split(contracts, 0.25, 5);
  EXPECT_EQ(s.train.size() + s.test.size(), 26u);
  std::size_t test_illicit = 0;
  for (const auto& a : s.test) {
    for (const auto& c : contracts) test_illicit += c.address == a && c.label == ingest::Label::Illicit;
  }
  EXPECT_EQ(test_illicit, 2u);  // round(0.25 * 6)
  EXPECT_EQ(s.test.size(), 7u);  // plus round(0.25 * 20)
  const auto again = stratified_split(contracts, 0.25, 5);
  EXPECT_EQ(again.test, s.test);
}

TEST(Pipeline, StagesSkipWhenUpToDateAndNameMissingArtifacts) {
  const auto root = scratch("stages");
  const auto fixture = make_small_fixture(root / "fixture");
  const auto cfg = PipelineConfig::from_json(quick_config(fixture));

  Pipeline fresh(cfg, root / "empty");
  try {
    fresh.run("score");
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_NE(e.artifact().find("contracts.jsonl"), std::string::npos);
  }

  Pipeline p(cfg, root / "out");
  EXPECT_TRUE(p.run("ingest"));
  EXPECT_FALSE(p.run("ingest"));
  EXPECT_TRUE(p.run("disasm"));
  try {
    p.run("train-cae");
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_NE(e.artifact().find("train_windows.jsonl"), std::string::npos);
  }
  Pipeline forced(cfg, root / "out", true);
  EXPECT_TRUE(forced.run("ingest"));

  const auto manifest = nlohmann::json::parse(slurp(root / "out/ingest/manifest.json"));
  EXPECT_EQ(manifest.at("stage"), "ingest");
  EXPECT_EQ(manifest.at("config_hash"), cfg.hash());
  EXPECT_EQ(manifest.at("seed"), 11);
  EXPECT_TRUE(manifest.at("outputs").contains("ingest/contracts.jsonl"));

  // A changed config invalidates the stage.
  auto j = quick_config(fixture);
  j["seed"] = 12;
  Pipeline changed(PipelineConfig::from_json(j), root / "out");
  EXPECT_TRUE(changed.run("ingest"));
  fs::remove_all(root);
}

TEST(Pipeline, RunAllEqualsStageByStage) {
  const auto root = scratch("equiv");
  const auto fixture = make_small_fixture(root / "fixture");
  const auto cfg = PipelineConfig::from_json(quick_config(fixture));
  Pipeline(cfg, root / "a").run_all();
  Pipeline staged(cfg, root / "b");
  for (const auto& s : stage_order()) staged.run(s);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "a");
    EXPECT_EQ(slurp(e.path()), slurp(root / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 40u);
  for (const auto* f : {"evaluate/metrics.csv", "sweep/sweep.csv", "score/multimodal_reports.jsonl",
                        "score/transaction_only_projection.csv", "gbdt/predictions.csv"}) {
    EXPECT_TRUE(fs::exists(root / "a" / f)) << f;
  }
  fs::remove_all(root);
}

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REPUTE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto root = scratch("cli");
  EXPECT_EQ(run_cli("make-fixture -o " + (root / "fx").string() + " --reputable 12 --illicit 6 --seed 2"), 0);
  EXPECT_TRUE(fs::exists(root / "fx/labels.csv"));

  std::ofstream(root / "bad.json") << R"({"seed": 1, "dataset": {"fixture_dir": ")" << (root / "fx").string()
                                   << R"("}, "features": {"window": 6}})";
  EXPECT_EQ(run_cli("ingest -c " + (root / "bad.json").string()), 1);
  std::ofstream(root / "noseed.json") << R"({"dataset": {"fixture_dir": ")" << (root / "fx").string() << R"("}})";
  EXPECT_EQ(run_cli("ingest -c " + (root / "noseed.json").string()), 1);
  EXPECT_EQ(run_cli("ingest -c " + (root / "noseed.json").string() + " --seed 3 -o " + (root / "o1").string()), 0);
  EXPECT_EQ(run_cli("ingest -c " + (root / "absent.json").string()), 1);
  EXPECT_EQ(run_cli("score -c " + (root / "noseed.json").string() + " --seed 3 -o " + (root / "o1").string()), 2);
  EXPECT_EQ(run_cli("score -c " + (root / "noseed.json").string() + " --seed 3 -o " + (root / "o2").string()), 2);
  fs::remove_all(root);
}

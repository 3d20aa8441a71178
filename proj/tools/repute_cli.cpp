// repute: command-line driver for the contract reputability pipeline.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "repute/common/error.hpp"
#include "repute/common/log.hpp"
#include "repute/pipeline/config.hpp"
#include "repute/pipeline/fixture_gen.hpp"
#include "repute/pipeline/stages.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitMissing = 2;
constexpr int kExitFailure = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline config (JSON)")->required();
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("-o,--out", o.out, "Output directory (default: config output_dir)");
  cmd->add_flag("-f,--force", o.force, "Re-run even when the stage manifest is up to date");
}

repute::pipeline::Pipeline make_pipeline(const CommonOptions& o) {
  auto cfg = repute::pipeline::PipelineConfig::load(o.config, o.seed);
  const std::filesystem::path out = o.out.empty() ? cfg.output_dir : std::filesystem::path(o.out);
  return repute::pipeline::Pipeline(std::move(cfg), out, o.force);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart-contract reputability pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  CommonOptions common;
  std::string stage_to_run;
  for (const auto& stage : repute::pipeline::stage_order()) {
    auto* cmd = app.add_subcommand(stage, "Run the " + stage + " stage");
    add_common(cmd, common);
    cmd->callback([&stage_to_run, stage] { stage_to_run = stage; });
  }
  auto* run_all = app.add_subcommand("run-all", "Run every stage in order");
  add_common(run_all, common);

  repute::pipeline::FixtureParams fixture;
  std::string fixture_out;
  auto* mk = app.add_subcommand("make-fixture", "Generate a synthetic labelled fixture directory");
  mk->add_option("-o,--out", fixture_out, "Fixture directory")->required();
  mk->add_option("--reputable", fixture.n_reputable, "Number of reputable contracts");
  mk->add_option("--illicit", fixture.n_illicit, "Number of illicit contracts");
  mk->add_option("--seed", fixture.seed, "Generator seed");
  mk->add_option("--code-separation", fixture.code_separation, "Illicit opcode profile distinctness in [0, 1]");

  CLI11_PARSE(app, argc, argv);
  repute::logger()->set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (mk->parsed()) {
      const auto contracts = repute::pipeline::make_fixture(fixture);
      repute::pipeline::write_fixture(fixture_out, contracts, fixture);
      repute::logger()->info("wrote {} contracts to {}", contracts.size(), fixture_out);
      return EXIT_SUCCESS;
    }
    auto pipeline = make_pipeline(common);
    if (run_all->parsed()) {
      pipeline.run_all();
    } else {
      pipeline.run(stage_to_run);
    }
    return EXIT_SUCCESS;
  } catch (const repute::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const repute::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

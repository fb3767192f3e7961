#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "themedet/pipeline.hpp"
#include "themedet/types.hpp"

using namespace themedet;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string seed;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("-o,--out", opts.out_dir, "Output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "Clustering seed (overrides config)");
  cmd->add_option("--workers", opts.workers, "Worker threads (overrides config)");
}

RunConfig make_config(const CommonOpts& opts) {
  RunConfig config = load_run_config(opts.config_path);
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (!opts.seed.empty()) config.kmeans.seed = std::stoull(opts.seed);
  if (opts.workers > 0) config.workers = opts.workers;
  return config;
}

int run_stage(const CommonOpts& opts, Stage until) {
  auto out = run_pipeline(make_config(opts), until);
  std::cout << "manifest: " << out.manifest.artifact_paths.at("manifest") << "\n";
  for (const auto& [name, path] : out.manifest.artifact_paths)
    if (name != "manifest") std::cout << "  " << name << ": " << path << "\n";
  if (until == Stage::Evaluate)
    std::cout << "micro_f1: " << out.manifest.micro_f1 << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"themedet: theme detection over tagged short-text corpora"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string stage_name;
  std::vector<std::string> manifest_paths;

  auto* ingest = app.add_subcommand("ingest", "Load, filter and split the corpus");
  auto* represent = app.add_subcommand("represent", "Build sentence / reduced-parse units");
  auto* encode = app.add_subcommand("encode", "Vectorize the units");
  auto* cluster = app.add_subcommand("cluster", "Fit the configured clusterer");
  auto* evaluate = app.add_subcommand("evaluate", "Score clusters as a tag classifier");
  auto* run = app.add_subcommand("run", "Run the whole pipeline");
  for (auto* cmd : {ingest, represent, encode, cluster, evaluate, run}) add_common(cmd, opts);
  run->add_option("--stage", stage_name, "Stop after this stage");

  auto* compare = app.add_subcommand("compare", "Tabulate micro-F1 across run manifests");
  compare->add_option("manifests", manifest_paths, "manifest.json files")
      ->required()
      ->expected(2, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) return run_stage(opts, Stage::Ingest);
    if (represent->parsed()) return run_stage(opts, Stage::Represent);
    if (encode->parsed()) return run_stage(opts, Stage::Encode);
    if (cluster->parsed()) return run_stage(opts, Stage::Cluster);
    if (evaluate->parsed()) return run_stage(opts, Stage::Evaluate);
    if (run->parsed())
      return run_stage(opts, stage_name.empty() ? Stage::Evaluate : parse_stage(stage_name));
    if (compare->parsed()) {
      std::vector<RunManifest> manifests;
      for (const auto& p : manifest_paths) manifests.push_back(RunManifest::from_json_file(p));
      std::cout << comparison_table_text(compare_runs(manifests));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

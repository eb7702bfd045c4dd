#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decorl/errors.hpp"
#include "decorl/harness.hpp"
#include "decorl/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"decorl: DQN / QR-DQN training with feature decorrelation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto* train = app.add_subcommand("train", "Run a seeded multi-run experiment");
  train->add_option("config", config_path, "key=value config file")->required();
  train->add_option("overrides", overrides,
                    "key=value overrides applied after the config file");

  std::string dir_a;
  std::string dir_b;
  auto* compare =
      app.add_subcommand("compare", "Compare two result directories (b = baseline)");
  compare->add_option("dir_a", dir_a, "result directory")->required();
  compare->add_option("dir_b", dir_b, "baseline result directory")->required();

  std::string checkpoint;
  std::string env_name;
  std::string analyze_out = "analysis";
  std::size_t batch_size = 256;
  std::size_t top_m = 50;
  std::size_t samples = 6;
  std::uint64_t analyze_seed = 0;
  auto* analyze =
      app.add_subcommand("analyze", "Export feature-covariance analysis CSVs");
  analyze->add_option("checkpoint", checkpoint, "network checkpoint file")->required();
  analyze->add_option("env", env_name, "environment to sample states from")->required();
  analyze->add_option("--out", analyze_out, "output directory");
  analyze->add_option("--batch-size", batch_size, "states in the analysis batch");
  analyze->add_option("--top-m", top_m, "size of the top-variance submatrix");
  analyze->add_option("--samples", samples, "activation snapshots to export");
  analyze->add_option("--seed", analyze_seed, "rollout seed");

  auto* verify = app.add_subcommand("verify", "Run the oracle verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      decorl::ExperimentConfig config = decorl::load_config_file(config_path);
      for (const auto& entry : overrides) {
        auto eq = entry.find('=');
        if (eq == std::string::npos) {
          throw decorl::ConfigError("override '" + entry + "' is not key=value");
        }
        decorl::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
      }
      auto dir = decorl::run_experiment(config);
      std::cout << "wrote " << config.num_seeds << " runs to " << dir.string() << "\n";
    } else if (compare->parsed()) {
      std::cout << decorl::format_report(decorl::compare_runs(dir_a, dir_b));
    } else if (analyze->parsed()) {
      auto paths = decorl::analyze_checkpoint(checkpoint, env_name,
                                              decorl::resolve_output_dir(analyze_out),
                                              batch_size, top_m, samples, analyze_seed);
      std::cout << "wrote " << paths.covariance.string() << "\n"
                << "wrote " << paths.variance_rank.string() << "\n"
                << "wrote " << paths.top_covariance.string() << "\n"
                << "wrote " << paths.activations.string() << "\n";
    } else if (verify->parsed()) {
      return decorl::print_verification(std::cout, decorl::run_verification());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

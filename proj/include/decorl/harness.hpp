#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "decorl/agent.hpp"
#include "decorl/matrix.hpp"
#include "decorl/metrics.hpp"
#include "decorl/network.hpp"
#include "decorl/runlog.hpp"

namespace decorl {

inline constexpr std::string_view kBuildVersion = "decorl 1.0.0";

// One experiment: num_seeds independent seeded trainings of the same agent
// config on one environment, logged under output_dir.
struct ExperimentConfig {
  std::string environment = "gridworld";
  AgentConfig agent;
  std::size_t total_steps = 20000;
  // Learn steps aggregated per logged loss row (window means). 1 logs every
  // learn step verbatim.
  std::size_t eval_every = 100;
  std::size_t num_seeds = 5;
  std::filesystem::path output_dir = "run";
  // Seed runs share nothing, so they may run in parallel.
  std::size_t threads = 1;

  void validate() const;
};

// Applies one key=value pair. Unknown keys and unparseable values throw
// ConfigError; keys cover every agent and experiment field.
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

// key=value lines, '#' comments, blank lines ignored.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Relative directories are placed under $DECORL_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

// Full config flattened into log-header metadata, including the build version.
Metadata config_metadata(const ExperimentConfig& config);

struct RunPaths {
  std::filesystem::path episodes;    // seedNNN_episodes.csv
  std::filesystem::path losses;      // seedNNN_losses.csv
  std::filesystem::path checkpoint;  // seedNNN_checkpoint.txt
};
RunPaths run_paths(const std::filesystem::path& dir, std::size_t seed_index);

// Trains every seed and writes its episode log, loss log, and final network
// checkpoint. Rows are flushed as they are produced, so a killed run leaves
// valid log prefixes. Returns the resolved output directory.
std::filesystem::path run_experiment(const ExperimentConfig& config);

struct ComparisonReport {
  std::string environment;
  std::size_t seeds_a = 0;
  std::size_t seeds_b = 0;
  // Median-across-seeds curves on a uniform 200-point grid, a vs baseline b.
  AucReport return_auc;
  bool has_correlation_auc = false;
  AucReport correlation_auc;
  // Median across seeds of each run's mean return over the final 25%.
  double tail_mean_a = 0.0;
  double tail_mean_b = 0.0;
  // Oracle-normalized scores, only for environments with a tabular oracle.
  // This is not a human-normalized score; reports label it accordingly.
  bool has_oracle = false;
  double random_return = 0.0;
  double optimal_return = 0.0;
  double oracle_normalized_a = 0.0;
  double oracle_normalized_b = 0.0;
};

// Compares two result directories produced by run_experiment; b is the
// baseline. Both must contain the same environment.
ComparisonReport compare_runs(const std::filesystem::path& dir_a,
                              const std::filesystem::path& dir_b);

std::string format_report(const ComparisonReport& report);

// decorl-matrix CSV: "# key value" metadata then comma-separated rows at 17
// significant digits, so read(write(m)) == m exactly.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const Metadata& metadata = {});
Matrix read_matrix_csv(const std::filesystem::path& path, Metadata* metadata = nullptr);

struct FeatureAnalysisPaths {
  std::filesystem::path covariance;      // full d x d feature covariance
  std::filesystem::path variance_rank;   // feature index, variance; descending
  std::filesystem::path top_covariance;  // covariance over the top-m features
  std::filesystem::path activations;     // feature rows for sampled states
};

// Feature-space diagnostics for a trained network over a batch of states:
// covariance heat-map data, features sorted by variance with the top-m
// submatrix extracted, and raw feature vectors for a few random samples.
FeatureAnalysisPaths export_feature_analysis(const QNetwork& net, const Matrix& batch,
                                             const std::filesystem::path& dir,
                                             std::size_t top_m = 50,
                                             std::size_t num_samples = 6,
                                             std::uint64_t seed = 0);

// Loads a checkpoint, collects a state batch from uniform-random rollouts of
// the named environment, and exports the feature analysis.
FeatureAnalysisPaths analyze_checkpoint(const std::filesystem::path& checkpoint,
                                        const std::string& env_name,
                                        const std::filesystem::path& out_dir,
                                        std::size_t batch_size = 256,
                                        std::size_t top_m = 50,
                                        std::size_t num_samples = 6,
                                        std::uint64_t seed = 0);

// Mean undiscounted returns of the uniform-random policy and the
// value-iteration greedy policy. True for environments with a tabular oracle
// (chain, gridworld, bandit); false otherwise.
bool oracle_baselines(const std::string& env_name, std::size_t episodes,
                      std::uint64_t seed, double* random_return,
                      double* optimal_return);

}  // namespace decorl

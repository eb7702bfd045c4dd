#include "decorl/harness.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <thread>
#include <utility>

#include "decorl/env.hpp"
#include "decorl/errors.hpp"
#include "decorl/losses.hpp"
#include "decorl/oracles.hpp"
#include "decorl/rng.hpp"

namespace decorl {
namespace {

// Seed-stream salts. Every run derives its own seed from the config seed and
// its seed index, then hands independent child streams to the agent and the
// environment resets.
constexpr std::uint64_t kRunStreamBase = 0x52554e00;
constexpr std::uint64_t kEnvStream = 0x454e56;
constexpr std::uint64_t kSampleStream = 0x5a3e;
constexpr std::uint64_t kRolloutStream = 0xba7c4;
constexpr std::uint64_t kBaselineStream = 0x0b5e;

constexpr std::size_t kGridPoints = 200;
constexpr double kTailFraction = 0.25;
constexpr std::size_t kBaselineEpisodes = 300;

bool parse_u64_raw(const std::string& value, std::uint64_t* out) {
  if (value.empty() || value[0] == '-' || value[0] == '+') return false;
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE) return false;
  *out = v;
  return true;
}

bool parse_double_raw(const std::string& value, double* out) {
  if (value.empty()) return false;
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') return false;
  *out = v;
  return true;
}

double config_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double_raw(value, &v)) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

std::size_t config_size(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  if (!parse_u64_raw(value, &v)) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_hidden(const std::string& value) {
  std::vector<std::size_t> widths;
  if (value.empty() || value == "none") return widths;
  std::stringstream ss(value);
  std::string token;
  while (std::getline(ss, token, ',')) {
    widths.push_back(config_size("hidden", trim(token)));
  }
  return widths;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t v : values) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

std::string seed_stem(std::size_t seed_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seed%03zu", seed_index);
  return buf;
}

double median_scalar(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (num_seeds < 1) throw ConfigError("num_seeds must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (total_steps <= agent.warm_start) {
    throw ConfigError("total_steps (" + std::to_string(total_steps) +
                      ") must exceed warm_start (" + std::to_string(agent.warm_start) +
                      ")");
  }
  auto env = make_environment(environment);
  agent.validate(env->spec());
}

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
  AgentConfig& a = config.agent;
  if (key == "environment") {
    config.environment = value;
  } else if (key == "algorithm") {
    a.algorithm = parse_algorithm(value);
  } else if (key == "gamma") {
    a.gamma = config_double(key, value);
  } else if (key == "lambda") {
    a.lambda = config_double(key, value);
  } else if (key == "hidden") {
    a.hidden = parse_hidden(value);
  } else if (key == "num_quantiles") {
    a.num_quantiles = config_size(key, value);
  } else if (key == "kappa") {
    a.kappa = config_double(key, value);
  } else if (key == "qr_inner_mean") {
    a.qr_inner_mean = config_bool(key, value);
  } else if (key == "optimizer") {
    a.optimizer.kind = parse_optimizer(value);
  } else if (key == "learning_rate") {
    a.optimizer.learning_rate = config_double(key, value);
  } else if (key == "rms_decay") {
    a.optimizer.rms_decay = config_double(key, value);
  } else if (key == "rms_epsilon") {
    a.optimizer.rms_epsilon = config_double(key, value);
  } else if (key == "beta1") {
    a.optimizer.beta1 = config_double(key, value);
  } else if (key == "beta2") {
    a.optimizer.beta2 = config_double(key, value);
  } else if (key == "adam_epsilon") {
    a.optimizer.adam_epsilon = config_double(key, value);
  } else if (key == "sync_period") {
    a.sync_period = config_size(key, value);
  } else if (key == "buffer_capacity") {
    a.buffer_capacity = config_size(key, value);
  } else if (key == "minibatch") {
    a.minibatch = config_size(key, value);
  } else if (key == "warm_start") {
    a.warm_start = config_size(key, value);
  } else if (key == "eps_start") {
    a.exploration.eps_start = config_double(key, value);
  } else if (key == "eps_end") {
    a.exploration.eps_end = config_double(key, value);
  } else if (key == "eps_decay_steps") {
    a.exploration.decay_steps = config_size(key, value);
  } else if (key == "decor_independent_batch") {
    a.decor_independent_batch = config_bool(key, value);
  } else if (key == "seed") {
    std::uint64_t v = 0;
    if (!parse_u64_raw(value, &v)) {
      throw ConfigError("seed: expected a non-negative integer, got '" + value + "'");
    }
    a.seed = v;
  } else if (key == "total_steps") {
    config.total_steps = config_size(key, value);
  } else if (key == "eval_every") {
    config.eval_every = config_size(key, value);
  } else if (key == "num_seeds") {
    config.num_seeds = config_size(key, value);
  } else if (key == "output_dir") {
    config.output_dir = value;
  } else if (key == "threads") {
    config.threads = config_size(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + t + "'");
    }
    apply_config_entry(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_absolute()) return dir;
  const char* root = std::getenv("DECORL_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0') return std::filesystem::path(root) / dir;
  return dir;
}

Metadata config_metadata(const ExperimentConfig& config) {
  const AgentConfig& a = config.agent;
  Metadata m;
  m.emplace_back("version", std::string(kBuildVersion));
  m.emplace_back("environment", config.environment);
  m.emplace_back("algorithm", algorithm_name(a.algorithm));
  m.emplace_back("gamma", format_double(a.gamma));
  m.emplace_back("lambda", format_double(a.lambda));
  m.emplace_back("hidden", a.hidden.empty() ? "none" : join_sizes(a.hidden));
  m.emplace_back("num_quantiles", std::to_string(a.num_quantiles));
  m.emplace_back("kappa", format_double(a.kappa));
  m.emplace_back("qr_inner_mean", a.qr_inner_mean ? "true" : "false");
  m.emplace_back("optimizer", optimizer_name(a.optimizer.kind));
  m.emplace_back("learning_rate", format_double(a.optimizer.learning_rate));
  m.emplace_back("rms_decay", format_double(a.optimizer.rms_decay));
  m.emplace_back("rms_epsilon", format_double(a.optimizer.rms_epsilon));
  m.emplace_back("beta1", format_double(a.optimizer.beta1));
  m.emplace_back("beta2", format_double(a.optimizer.beta2));
  m.emplace_back("adam_epsilon", format_double(a.optimizer.adam_epsilon));
  m.emplace_back("sync_period", std::to_string(a.sync_period));
  m.emplace_back("buffer_capacity", std::to_string(a.buffer_capacity));
  m.emplace_back("minibatch", std::to_string(a.minibatch));
  m.emplace_back("warm_start", std::to_string(a.warm_start));
  m.emplace_back("eps_start", format_double(a.exploration.eps_start));
  m.emplace_back("eps_end", format_double(a.exploration.eps_end));
  m.emplace_back("eps_decay_steps", std::to_string(a.exploration.decay_steps));
  m.emplace_back("decor_independent_batch", a.decor_independent_batch ? "true" : "false");
  m.emplace_back("seed", std::to_string(a.seed));
  m.emplace_back("total_steps", std::to_string(config.total_steps));
  m.emplace_back("eval_every", std::to_string(config.eval_every));
  m.emplace_back("num_seeds", std::to_string(config.num_seeds));
  return m;
}

RunPaths run_paths(const std::filesystem::path& dir, std::size_t seed_index) {
  std::string stem = seed_stem(seed_index);
  return {dir / (stem + "_episodes.csv"), dir / (stem + "_losses.csv"),
          dir / (stem + "_checkpoint.txt")};
}

namespace {

void run_single_seed(const ExperimentConfig& config, const std::filesystem::path& dir,
                     std::size_t seed_index) {
  auto env = make_environment(config.environment);
  const EnvSpec& spec = env->spec();

  AgentConfig agent_config = config.agent;
  std::uint64_t run_seed = mix_seed(config.agent.seed, kRunStreamBase + seed_index);
  agent_config.seed = run_seed;
  Agent agent(agent_config, spec);
  Rng env_rng(mix_seed(run_seed, kEnvStream));

  Metadata metadata = config_metadata(config);
  metadata.emplace_back("seed_index", std::to_string(seed_index));
  metadata.emplace_back("run_seed", std::to_string(run_seed));

  RunPaths paths = run_paths(dir, seed_index);
  CsvLogger episode_log(paths.episodes, metadata, kEpisodeHeader);
  CsvLogger loss_log(paths.losses, metadata, kLossHeader);

  std::vector<double> obs = env->reset(env_rng.next_u64());
  double episode_return = 0.0;
  std::size_t episode_steps = 0;
  double td_sum = 0.0;
  double corr_sum = 0.0;
  std::size_t window = 0;

  for (std::size_t step = 1; step <= config.total_steps; ++step) {
    std::size_t action = step <= agent_config.warm_start
                             ? agent.random_action()
                             : agent.act(obs, agent.env_steps());
    StepResult result = env->step(action);
    episode_return += result.reward_raw;
    ++episode_steps;
    agent.observe({obs, action, result.reward_raw, result.observation, result.terminal});

    if (step > agent_config.warm_start) {
      if (auto metrics = agent.learn_step()) {
        td_sum += metrics->td_loss;
        corr_sum += metrics->correlation_loss;
        ++window;
      }
    }
    if (window > 0 && (window == config.eval_every || step == config.total_steps)) {
      double inv = 1.0 / static_cast<double>(window);
      loss_log.append(step, std::array{td_sum * inv, corr_sum * inv});
      td_sum = 0.0;
      corr_sum = 0.0;
      window = 0;
    }

    // Hitting the step cap truncates: the transition was stored non-terminal
    // (so learning bootstraps through it) but the episode still ends here.
    bool truncated = !result.terminal && episode_steps >= spec.max_episode_steps;
    if (result.terminal || truncated) {
      episode_log.append(
          step, std::array{episode_return,
                           agent_config.exploration.epsilon(agent.env_steps())});
      obs = env->reset(env_rng.next_u64());
      episode_return = 0.0;
      episode_steps = 0;
    } else {
      obs = std::move(result.observation);
    }
  }

  std::ofstream checkpoint(paths.checkpoint);
  if (!checkpoint) throw ConfigError("cannot write checkpoint " + paths.checkpoint.string());
  save_network(agent.online(), agent.checkpoint_info(), checkpoint);
  checkpoint.flush();
  if (!checkpoint) throw ConfigError("failed writing checkpoint " + paths.checkpoint.string());
}

}  // namespace

std::filesystem::path run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::path dir = resolve_output_dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " + dir.string() + ": " +
                      ec.message());
  }

  if (config.threads == 1 || config.num_seeds == 1) {
    for (std::size_t i = 0; i < config.num_seeds; ++i) run_single_seed(config, dir, i);
    return dir;
  }

  std::vector<std::exception_ptr> failures(config.num_seeds);
  for (std::size_t base = 0; base < config.num_seeds; base += config.threads) {
    std::size_t stop = std::min(config.num_seeds, base + config.threads);
    std::vector<std::thread> wave;
    wave.reserve(stop - base);
    for (std::size_t i = base; i < stop; ++i) {
      wave.emplace_back([&config, &dir, &failures, i] {
        try {
          run_single_seed(config, dir, i);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      });
    }
    for (auto& t : wave) t.join();
  }
  for (auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return dir;
}

namespace {

struct LoadedRun {
  Metadata metadata;
  std::vector<EpisodeRow> episodes;
  std::vector<LossRow> losses;
};

struct RunSet {
  std::string environment;
  std::size_t total_steps = 0;
  std::vector<LoadedRun> runs;
};

RunSet load_run_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("not a result directory: " + dir.string());
  }
  std::vector<std::filesystem::path> episode_files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.starts_with("seed") && name.ends_with("_episodes.csv")) {
      episode_files.push_back(entry.path());
    }
  }
  std::sort(episode_files.begin(), episode_files.end());
  if (episode_files.empty()) {
    throw ConfigError("no seed episode logs under " + dir.string());
  }

  RunSet set;
  for (const auto& episodes_path : episode_files) {
    LoadedRun run;
    run.episodes = read_episode_log(episodes_path, &run.metadata);
    std::string stem = episodes_path.filename().string();
    stem.resize(stem.size() - std::string("_episodes.csv").size());
    run.losses = read_loss_log(episodes_path.parent_path() / (stem + "_losses.csv"));

    const std::string& env = metadata_value(run.metadata, "environment");
    std::size_t steps = config_size("total_steps",
                                    metadata_value(run.metadata, "total_steps"));
    if (set.runs.empty()) {
      set.environment = env;
      set.total_steps = steps;
    } else if (env != set.environment) {
      throw ConfigError("mixed environments under " + dir.string() + ": " +
                        set.environment + " vs " + env);
    } else if (steps != set.total_steps) {
      throw ConfigError("mixed total_steps under " + dir.string());
    }
    set.runs.push_back(std::move(run));
  }
  return set;
}

Curve median_return_curve(const RunSet& set) {
  std::vector<Curve> curves;
  curves.reserve(set.runs.size());
  for (const auto& run : set.runs) curves.push_back(episode_curve(run.episodes));
  return median_curve(curves, kGridPoints, 0.0, static_cast<double>(set.total_steps));
}

Curve median_correlation_curve(const RunSet& set) {
  std::vector<Curve> curves;
  curves.reserve(set.runs.size());
  for (const auto& run : set.runs) curves.push_back(correlation_curve(run.losses));
  return median_curve(curves, kGridPoints, 0.0, static_cast<double>(set.total_steps));
}

double median_tail_mean(const RunSet& set) {
  std::vector<double> values;
  values.reserve(set.runs.size());
  for (const auto& run : set.runs) {
    values.push_back(tail_mean(run.episodes, kTailFraction, set.total_steps));
  }
  return median_scalar(std::move(values));
}

}  // namespace

ComparisonReport compare_runs(const std::filesystem::path& dir_a,
                              const std::filesystem::path& dir_b) {
  RunSet a = load_run_set(dir_a);
  RunSet b = load_run_set(dir_b);
  if (a.environment != b.environment) {
    throw ConfigError("environment mismatch: " + a.environment + " vs " +
                      b.environment);
  }

  ComparisonReport report;
  report.environment = a.environment;
  report.seeds_a = a.runs.size();
  report.seeds_b = b.runs.size();
  report.return_auc = normalized_auc(median_return_curve(a), median_return_curve(b));
  try {
    report.correlation_auc =
        normalized_auc(median_correlation_curve(a), median_correlation_curve(b));
    report.has_correlation_auc = true;
  } catch (const Error&) {
    // Baseline correlation AUC can be zero (linear nets log no penalty).
    report.has_correlation_auc = false;
  }
  report.tail_mean_a = median_tail_mean(a);
  report.tail_mean_b = median_tail_mean(b);

  double random_return = 0.0;
  double optimal_return = 0.0;
  if (oracle_baselines(report.environment, kBaselineEpisodes, 0, &random_return,
                       &optimal_return) &&
      optimal_return != random_return) {
    report.has_oracle = true;
    report.random_return = random_return;
    report.optimal_return = optimal_return;
    report.oracle_normalized_a =
        oracle_normalized_score(report.tail_mean_a, random_return, optimal_return);
    report.oracle_normalized_b =
        oracle_normalized_score(report.tail_mean_b, random_return, optimal_return);
  }
  return report;
}

std::string format_report(const ComparisonReport& report) {
  std::ostringstream out;
  char line[256];
  out << "environment: " << report.environment << "\n";
  out << "seeds: " << report.seeds_a << " vs " << report.seeds_b << " (baseline)\n";
  std::snprintf(line, sizeof(line),
                "return AUC: %+.2f%% vs baseline (auc %.6g vs %.6g, offset %.6g)\n",
                report.return_auc.improvement_pct, report.return_auc.auc_a,
                report.return_auc.auc_b, report.return_auc.offset);
  out << line;
  if (report.has_correlation_auc) {
    std::snprintf(line, sizeof(line), "correlation-loss AUC: %+.2f%% vs baseline\n",
                  report.correlation_auc.improvement_pct);
    out << line;
  }
  std::snprintf(line, sizeof(line), "tail mean return (final 25%%): %.6g vs %.6g\n",
                report.tail_mean_a, report.tail_mean_b);
  out << line;
  if (report.has_oracle) {
    std::snprintf(line, sizeof(line),
                  "oracle-normalized score: %.4f vs %.4f (random %.6g, optimal %.6g)\n",
                  report.oracle_normalized_a, report.oracle_normalized_b,
                  report.random_return, report.optimal_return);
    out << line;
  }
  return out.str();
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const Metadata& metadata) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# decorl-matrix v1\n";
  out << "# rows " << m.rows() << "\n";
  out << "# cols " << m.cols() << "\n";
  for (const auto& [key, value] : metadata) out << "# " << key << ' ' << value << "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw ConfigError("failed writing " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path, Metadata* metadata) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.empty()) throw ParseError(path.string() + ": empty matrix file");
  if (text.back() != '\n') {
    throw ParseError(path.string() + ": truncated matrix file (missing final newline)");
  }

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty() || lines[0] != "# decorl-matrix v1") {
    throw ParseError(path.string() + ": missing decorl-matrix header");
  }

  Metadata meta;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  bool have_rows = false;
  bool have_cols = false;
  std::size_t i = 1;
  for (; i < lines.size() && lines[i].starts_with("#"); ++i) {
    std::string entry = trim(lines[i].substr(1));
    auto space = entry.find(' ');
    std::string key = space == std::string::npos ? entry : entry.substr(0, space);
    std::string value = space == std::string::npos ? "" : trim(entry.substr(space + 1));
    if (key == "rows") {
      if (!parse_u64_raw(value, &rows)) {
        throw ParseError(path.string() + ": bad rows header '" + value + "'");
      }
      have_rows = true;
    } else if (key == "cols") {
      if (!parse_u64_raw(value, &cols)) {
        throw ParseError(path.string() + ": bad cols header '" + value + "'");
      }
      have_cols = true;
    } else {
      meta.emplace_back(key, value);
    }
  }
  if (!have_rows || !have_cols) {
    throw ParseError(path.string() + ": missing rows/cols header");
  }
  if (lines.size() - i != rows) {
    throw ParseError(path.string() + ": expected " + std::to_string(rows) +
                     " data rows, found " + std::to_string(lines.size() - i));
  }

  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string& line = lines[i + r];
    std::size_t start = 0;
    std::size_t c = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string field = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      if (c >= cols || !parse_double_raw(field, &v) || !std::isfinite(v)) {
        throw ParseError(path.string() + ": bad row " + std::to_string(r) +
                         " ('" + line + "')");
      }
      m(r, c) = v;
      ++c;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (c != cols) {
      throw ParseError(path.string() + ": row " + std::to_string(r) + " has " +
                       std::to_string(c) + " columns, expected " +
                       std::to_string(cols));
    }
  }
  if (metadata != nullptr) *metadata = std::move(meta);
  return m;
}

FeatureAnalysisPaths export_feature_analysis(const QNetwork& net, const Matrix& batch,
                                             const std::filesystem::path& dir,
                                             std::size_t top_m, std::size_t num_samples,
                                             std::uint64_t seed) {
  ForwardResult fr = forward(net, batch);
  const Matrix& features = fr.features;
  CovarianceMatrix cov = feature_covariance(features);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());

  FeatureAnalysisPaths paths;
  paths.covariance = dir / "covariance.csv";
  paths.variance_rank = dir / "variance_rank.csv";
  paths.top_covariance = dir / "top_covariance.csv";
  paths.activations = dir / "activations.csv";

  const std::size_t d = cov.d;
  const std::size_t n = features.rows();
  Metadata base{{"batch_size", std::to_string(n)},
                {"feature_dim", std::to_string(d)}};

  {
    Metadata meta = base;
    meta.emplace_back("kind", "feature-covariance");
    write_matrix_csv(cov.entries, paths.covariance, meta);
  }

  // Features sorted by variance, descending; ties keep the lower index first.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return cov.entries(x, x) > cov.entries(y, y);
  });

  Matrix rank(d, 2);
  for (std::size_t r = 0; r < d; ++r) {
    rank(r, 0) = static_cast<double>(order[r]);
    rank(r, 1) = cov.entries(order[r], order[r]);
  }
  {
    Metadata meta = base;
    meta.emplace_back("kind", "variance-rank");
    meta.emplace_back("columns", "feature_index,variance");
    write_matrix_csv(rank, paths.variance_rank, meta);
  }

  const std::size_t m = std::min(top_m, d);
  Matrix top(m, m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) top(r, c) = cov.entries(order[r], order[c]);
  }
  {
    Metadata meta = base;
    meta.emplace_back("kind", "top-covariance");
    std::vector<std::size_t> kept(order.begin(), order.begin() + m);
    meta.emplace_back("feature_indices", join_sizes(kept));
    write_matrix_csv(top, paths.top_covariance, meta);
  }

  // Distinct random sample rows via a partial shuffle.
  const std::size_t samples = std::min(num_samples, n);
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  Rng rng(mix_seed(seed, kSampleStream));
  for (std::size_t k = 0; k < samples; ++k) {
    std::swap(pick[k], pick[k + rng.uniform_int(n - k)]);
  }
  pick.resize(samples);
  std::sort(pick.begin(), pick.end());

  Matrix acts(samples, d);
  for (std::size_t r = 0; r < samples; ++r) {
    auto src = features.row(pick[r]);
    std::copy(src.begin(), src.end(), acts.row(r).begin());
  }
  {
    Metadata meta = base;
    meta.emplace_back("kind", "feature-activations");
    meta.emplace_back("sample_rows", join_sizes(pick));
    write_matrix_csv(acts, paths.activations, meta);
  }
  return paths;
}

FeatureAnalysisPaths analyze_checkpoint(const std::filesystem::path& checkpoint,
                                        const std::string& env_name,
                                        const std::filesystem::path& out_dir,
                                        std::size_t batch_size, std::size_t top_m,
                                        std::size_t num_samples, std::uint64_t seed) {
  std::ifstream in(checkpoint);
  if (!in) throw ConfigError("cannot read checkpoint " + checkpoint.string());
  QNetwork net = load_network(in);

  auto env = make_environment(env_name);
  const EnvSpec& spec = env->spec();
  if (spec.obs_dim != net.input_dim()) {
    throw ConfigError("checkpoint expects input dim " +
                      std::to_string(net.input_dim()) + " but " + env_name +
                      " emits " + std::to_string(spec.obs_dim));
  }
  if (batch_size < 2) throw UsageError("analyze_checkpoint: batch_size must be >= 2");

  Rng rng(mix_seed(seed, kRolloutStream));
  Matrix batch(batch_size, spec.obs_dim);
  std::vector<double> obs = env->reset(rng.next_u64());
  std::size_t episode_steps = 0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::copy(obs.begin(), obs.end(), batch.row(i).begin());
    StepResult result = env->step(rng.uniform_int(spec.num_actions));
    ++episode_steps;
    if (result.terminal || episode_steps >= spec.max_episode_steps) {
      obs = env->reset(rng.next_u64());
      episode_steps = 0;
    } else {
      obs = std::move(result.observation);
    }
  }
  return export_feature_analysis(net, batch, out_dir, top_m, num_samples, seed);
}

bool oracle_baselines(const std::string& env_name, std::size_t episodes,
                      std::uint64_t seed, double* random_return,
                      double* optimal_return) {
  if (env_name.starts_with("bandit")) {
    auto env = make_environment(env_name);
    const auto& probs = dynamic_cast<const BanditEnv&>(*env).arm_probs();
    double sum = 0.0;
    double best = probs.front();
    for (double p : probs) {
      sum += p;
      best = std::max(best, p);
    }
    *random_return = sum / static_cast<double>(probs.size());
    *optimal_return = best;
    return true;
  }

  oracles::TabularMDP mdp;
  if (env_name == "chain") {
    mdp = oracles::make_chain_mdp(0.99);
  } else if (env_name == "gridworld") {
    mdp = oracles::make_gridworld_mdp(0.99);
  } else {
    return false;
  }
  if (episodes == 0) throw UsageError("oracle_baselines: episodes must be positive");

  Matrix q = oracles::value_iteration(mdp, 1e-10);
  auto env = make_environment(env_name);
  const EnvSpec& spec = env->spec();
  Rng rng(mix_seed(seed, kBaselineStream));

  auto one_hot_state = [](std::span<const double> obs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < obs.size(); ++i) {
      if (obs[i] > obs[best]) best = i;
    }
    return best;
  };
  auto mean_return = [&](bool greedy) {
    double total = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
      std::vector<double> obs = env->reset(rng.next_u64());
      double ret = 0.0;
      for (std::size_t t = 0; t < spec.max_episode_steps; ++t) {
        std::size_t action = 0;
        if (greedy) {
          std::size_t s = one_hot_state(obs);
          for (std::size_t a = 1; a < spec.num_actions; ++a) {
            if (q(s, a) > q(s, action)) action = a;
          }
        } else {
          action = rng.uniform_int(spec.num_actions);
        }
        StepResult result = env->step(action);
        ret += result.reward_raw;
        if (result.terminal) break;
        obs = std::move(result.observation);
      }
      total += ret;
    }
    return total / static_cast<double>(episodes);
  };

  *optimal_return = mean_return(true);
  *random_return = mean_return(false);
  return true;
}

}  // namespace decorl

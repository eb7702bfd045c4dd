#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace decorl {

// Flat "# key value" pairs stored in every log header alongside the column row.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct EpisodeRow {
  std::size_t step = 0;  // env step at which the episode ended
  double episode_return = 0.0;  // sum of raw (unclipped) rewards
  double epsilon = 0.0;
};

struct LossRow {
  std::size_t step = 0;
  double td_loss = 0.0;
  double correlation_loss = 0.0;
};

inline constexpr std::string_view kEpisodeHeader = "step,episode_return,epsilon";
inline constexpr std::string_view kLossHeader = "step,td_loss,correlation_loss";

// Append-only CSV writer. Every row is flushed so a killed run leaves a valid
// prefix; floats use 17 significant digits for exact round-trips.
class CsvLogger {
 public:
  CsvLogger(const std::filesystem::path& path, const Metadata& metadata,
            std::string_view header);

  void append(std::size_t step, std::span<const double> values);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t num_value_columns_;
};

struct ParsedLog {
  Metadata metadata;
  std::vector<std::vector<double>> rows;  // first column is the step
};

// Strict parse: header must match, every row must have the full column count
// and finite values, steps must strictly increase. A file that does not end in
// a newline (a row cut mid-write) is rejected as truncated.
ParsedLog parse_csv_log(const std::filesystem::path& path, std::string_view header);

std::vector<EpisodeRow> read_episode_log(const std::filesystem::path& path,
                                         Metadata* metadata = nullptr);
std::vector<LossRow> read_loss_log(const std::filesystem::path& path,
                                   Metadata* metadata = nullptr);

// Value for `key`, throwing ParseError when absent.
const std::string& metadata_value(const Metadata& metadata, const std::string& key);

std::string format_double(double value);  // %.17g

}  // namespace decorl

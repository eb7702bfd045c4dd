#include "decorl/runlog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "decorl/errors.hpp"

namespace decorl {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvLogger::CsvLogger(const std::filesystem::path& path, const Metadata& metadata,
                     std::string_view header)
    : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw Error("CsvLogger: cannot open " + path.string() + " for writing");
  out_ << "# decorl-log v1\n";
  for (const auto& [key, value] : metadata) out_ << "# " << key << " " << value << "\n";
  out_ << header << "\n";
  out_.flush();
  num_value_columns_ = std::count(header.begin(), header.end(), ',');
}

void CsvLogger::append(std::size_t step, std::span<const double> values) {
  if (values.size() != num_value_columns_) {
    throw UsageError("CsvLogger: expected " + std::to_string(num_value_columns_) +
                     " values per row");
  }
  out_ << step;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError("CsvLogger: refusing to log non-finite value at step " +
                         std::to_string(step));
    }
    out_ << ',' << format_double(v);
  }
  out_ << '\n';
  out_.flush();
  if (!out_) throw Error("CsvLogger: write to " + path_.string() + " failed");
}

ParsedLog parse_csv_log(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open log file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.empty()) throw ParseError(path.string() + ": empty log file");
  if (text.back() != '\n') {
    throw ParseError(path.string() + ": truncated log (missing final newline)");
  }

  ParsedLog log;
  const std::size_t columns = std::count(header.begin(), header.end(), ',') + 1;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.size() > 1 && line[1] == ' ' ? line.substr(2) : line.substr(1);
      const std::size_t space = body.find(' ');
      if (space != std::string::npos) {
        log.metadata.emplace_back(body.substr(0, space), body.substr(space + 1));
      } else {
        log.metadata.emplace_back(body, "");
      }
      continue;
    }
    if (!header_seen) {
      if (line != header) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": expected header '" + std::string(header) + "', got '" + line +
                         "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(columns);
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field = line.substr(start, comma - start);
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": bad numeric field '" + field + "' (truncated row?)");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != columns) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " fields, got " +
                       std::to_string(row.size()) + " (truncated row?)");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": non-finite value");
      }
    }
    if (!log.rows.empty() && row[0] <= log.rows.back()[0]) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": steps are not strictly increasing");
    }
    log.rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(path.string() + ": missing column header");
  return log;
}

std::vector<EpisodeRow> read_episode_log(const std::filesystem::path& path,
                                         Metadata* metadata) {
  ParsedLog log = parse_csv_log(path, kEpisodeHeader);
  if (metadata != nullptr) *metadata = std::move(log.metadata);
  std::vector<EpisodeRow> rows;
  rows.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    rows.push_back({static_cast<std::size_t>(r[0]), r[1], r[2]});
  }
  return rows;
}

std::vector<LossRow> read_loss_log(const std::filesystem::path& path, Metadata* metadata) {
  ParsedLog log = parse_csv_log(path, kLossHeader);
  if (metadata != nullptr) *metadata = std::move(log.metadata);
  std::vector<LossRow> rows;
  rows.reserve(log.rows.size());
  for (const auto& r : log.rows) {
    rows.push_back({static_cast<std::size_t>(r[0]), r[1], r[2]});
  }
  return rows;
}

const std::string& metadata_value(const Metadata& metadata, const std::string& key) {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  throw ParseError("log metadata has no key '" + key + "'");
}

}  // namespace decorl

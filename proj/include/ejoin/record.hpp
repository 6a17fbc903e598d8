#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ejoin/core.hpp"
#include "ejoin/join.hpp"

namespace ejoin {

/// One join run: the configuration that produced it plus its JoinStats.
struct RunRecord {
  std::string algo;
  std::uint64_t left_rows = 0;
  std::uint64_t right_rows = 0;
  std::uint64_t dim = 0;
  float threshold = 0.0f;
  std::uint64_t threads = 1;
  std::uint64_t budget_bytes = 0;
  std::string model_spec;
  std::uint64_t seed = 0;
  JoinStats stats;
  std::string timestamp;
};

RunRecord make_run_record(const JoinStats& stats, std::uint64_t left_rows,
                          std::uint64_t right_rows, std::uint64_t dim, float threshold,
                          std::uint64_t budget_bytes, std::string model_spec, std::uint64_t seed);

/// Flat JSON object, snake_case keys in csv_header() order.
std::string to_json(const RunRecord& r);
/// Comma-separated column names; identical for every record.
std::string csv_header();
std::string csv_row(const RunRecord& r);

/// ISO-8601 UTC, second precision.
std::string utc_timestamp();

/// Shortest decimal that round-trips to the same fp32.
std::string format_float(float value);

/// "left,right,similarity" lines, no header, canonical order.
void write_matches_csv(std::ostream& out, const MatchSet& m);

/// One token per LF-terminated line. A trailing CR is stripped.
std::vector<std::string> read_token_file(const std::filesystem::path& path);
void write_token_file(const std::filesystem::path& path, const std::vector<std::string>& tokens);

}  // namespace ejoin

#include "ejoin/record.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <ostream>

namespace ejoin {

RunRecord make_run_record(const JoinStats& stats, std::uint64_t left_rows,
                          std::uint64_t right_rows, std::uint64_t dim, float threshold,
                          std::uint64_t budget_bytes, std::string model_spec, std::uint64_t seed) {
  RunRecord r;
  r.algo = std::string(to_string(stats.algo));
  r.left_rows = left_rows;
  r.right_rows = right_rows;
  r.dim = dim;
  r.threshold = threshold;
  r.threads = stats.threads;
  r.budget_bytes = budget_bytes;
  r.model_spec = std::move(model_spec);
  r.seed = seed;
  r.stats = stats;
  r.timestamp = utc_timestamp();
  return r;
}

namespace {

nlohmann::ordered_json as_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["algo"] = r.algo;
  j["left_rows"] = r.left_rows;
  j["right_rows"] = r.right_rows;
  j["dim"] = r.dim;
  j["threshold"] = std::stod(format_float(r.threshold));
  j["threads"] = r.threads;
  j["budget_bytes"] = r.budget_bytes;
  j["model_spec"] = r.model_spec;
  j["seed"] = r.seed;
  j["wall_nanos"] = r.stats.wall_nanos;
  j["model_calls_left"] = r.stats.model_calls_left;
  j["model_calls_right"] = r.stats.model_calls_right;
  j["pairs_compared"] = r.stats.pairs_compared;
  j["matches"] = r.stats.matches;
  j["peak_buffer_bytes"] = r.stats.peak_buffer_bytes;
  j["tiles"] = r.stats.tiles;
  j["repaired_rows"] = r.stats.repaired_rows;
  j["inner_relation"] = std::string(to_string(r.stats.inner_relation));
  j["timestamp"] = r.timestamp;
  return j;
}

std::string csv_field(const nlohmann::ordered_json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
    return v.dump();
}

}  // namespace

std::string to_json(const RunRecord& r) { return as_json(r).dump(); }

std::string csv_header() {
  std::string out;
  const auto fields = as_json(RunRecord{});
  for (const auto& [key, value] : fields.items()) {
    if (!out.empty()) out += ',';
    out += key;
  }
  return out;
}

std::string csv_row(const RunRecord& r) {
  std::string out;
  bool first = true;
  const auto fields = as_json(r);
  for (const auto& [key, value] : fields.items()) {
    if (!first) out += ',';
    first = false;
    out += csv_field(value);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_float(float value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_matches_csv(std::ostream& out, const MatchSet& m) {
  for (const Match& x : m.matches) {
    out << x.left << ',' << x.right << ',' << format_float(x.similarity) << '\n';
  }
}

std::vector<std::string> read_token_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  return tokens;
}

void write_token_file(const std::filesystem::path& path, const std::vector<std::string>& tokens) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : tokens) out << t << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ejoin

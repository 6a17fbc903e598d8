#include "ejoin/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ejoin/linalg.hpp"

namespace ejoin {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void busy_wait(std::uint64_t nanos) {
  if (nanos == 0) return;
  const auto until = std::chrono::steady_clock::now() + std::chrono::nanoseconds(nanos);
  while (std::chrono::steady_clock::now() < until) {
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

void synthetic_vector(std::string_view token, std::uint64_t seed, std::span<float> out) {
  std::uint64_t state = fnv1a64(token) ^ seed;
  for (float& x : out) {
    const double u = static_cast<double>(splitmix64(state)) / 18446744073709551616.0;
    x = static_cast<float>(u * 2.0 - 1.0);
  }
  normalize_in_place(out);
}

EmbeddingModel::EmbeddingModel(ModelKind kind, std::size_t dim, std::uint64_t seed,
                               std::uint64_t latency_ns, Table table, OovPolicy oov)
    : kind_(kind),
      dim_(dim),
      seed_(seed),
      latency_ns_(latency_ns),
      table_(std::move(table)),
      oov_(oov) {
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
  for (const auto& [token, vec] : table_) {
    if (vec.size() != dim_) throw DimensionMismatch(vec.size(), dim_);
  }
}

EmbeddingModel EmbeddingModel::synthetic(std::uint64_t seed, std::size_t dim,
                                         std::uint64_t latency_ns) {
  return EmbeddingModel(ModelKind::synthetic, dim, seed, latency_ns, {}, OovPolicy::error);
}

EmbeddingModel EmbeddingModel::lookup(std::size_t dim, Table table, OovPolicy oov,
                                      std::uint64_t seed) {
  return EmbeddingModel(ModelKind::lookup, dim, seed, 0, std::move(table), oov);
}

EmbeddingModel::EmbeddingModel(EmbeddingModel&& other) noexcept
    : kind_(other.kind_),
      dim_(other.dim_),
      seed_(other.seed_),
      latency_ns_(other.latency_ns_),
      table_(std::move(other.table_)),
      oov_(other.oov_),
      calls_(other.calls_.load()) {}

EmbeddingModel& EmbeddingModel::operator=(EmbeddingModel&& other) noexcept {
  kind_ = other.kind_;
  dim_ = other.dim_;
  seed_ = other.seed_;
  latency_ns_ = other.latency_ns_;
  table_ = std::move(other.table_);
  oov_ = other.oov_;
  calls_.store(other.calls_.load());
  return *this;
}

bool EmbeddingModel::contains(std::string_view token) const {
  return table_.find(std::string(token)) != table_.end();
}

std::vector<float> EmbeddingModel::embed(std::string_view token) const {
  std::vector<float> out(dim_);
  embed_into(token, out);
  return out;
}

void EmbeddingModel::embed_into(std::string_view token, std::span<float> out) const {
  if (out.size() != dim_) throw DimensionMismatch(out.size(), dim_);
  calls_.fetch_add(1, std::memory_order_relaxed);
  if (kind_ == ModelKind::synthetic) {
    synthetic_vector(token, seed_, out);
    busy_wait(latency_ns_);
    return;
  }
  auto it = table_.find(std::string(token));
  if (it != table_.end()) {
    std::copy(it->second.begin(), it->second.end(), out.begin());
    return;
  }
  if (oov_ == OovPolicy::error) throw OutOfVocabulary(std::string(token));
  synthetic_vector(token, seed_, out);
}

EmbeddedRelation embed_relation(const EmbeddingModel& model, const RawRelation& r) {
  const std::size_t dim = model.dim();
  std::vector<float> data(r.size() * dim);
  for (std::size_t i = 0; i < r.size(); ++i) {
    model.embed_into(r.tokens()[i], std::span<float>(data.data() + i * dim, dim));
  }
  return EmbeddedRelation(std::move(data), dim, false, r.name());
}

const std::string& decode(const RawRelation& r, Offset offset) { return r.at(offset); }

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto next = line.find(' ', pos);
    const auto end = next == std::string_view::npos ? line.size() : next;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

EmbeddingModel load_vec(std::istream& in, OovPolicy oov, std::uint64_t seed) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_spaces(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      dim == 0) {
    throw ParseError(1, "malformed header, expected '<count> <dim>'");
  }

  EmbeddingModel::Table table;
  table.reserve(count);
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (rows == count) throw ParseError(line_no, "more rows than the header count " +
                                                     std::to_string(count));
    const auto fields = split_spaces(line);
    if (fields.size() != dim + 1) {
      throw ParseError(line_no, "expected " + std::to_string(dim) + " components, got " +
                                    std::to_string(fields.empty() ? 0 : fields.size() - 1));
    }
    std::vector<float> vec(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_number(fields[k + 1], vec[k]) || !std::isfinite(vec[k])) {
        throw ParseError(line_no, "bad float '" + std::string(fields[k + 1]) + "'");
      }
    }
    table.insert_or_assign(std::string(fields[0]), std::move(vec));
    ++rows;
  }
  if (rows != count) {
    throw ParseError(line_no, "header declares " + std::to_string(count) + " rows, found " +
                                  std::to_string(rows));
  }
  return EmbeddingModel::lookup(dim, std::move(table), oov, seed);
}

EmbeddingModel load_vec_file(const std::filesystem::path& path, OovPolicy oov,
                             std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return load_vec(in, oov, seed);
}

std::vector<ScoredToken> top_k(const EmbeddingModel& model, const EmbeddedRelation& er,
                               const RawRelation& raw, std::string_view probe, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be positive");
  if (er.rows() != raw.size()) throw DimensionMismatch(er.rows(), raw.size());
  const auto query = model.embed(probe);
  const auto sims = cosine_vm(query, er);

  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sims[a] != sims[b] ? sims[a] > sims[b] : a < b;
                    });
  std::vector<ScoredToken> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({raw.at(order[i]), sims[order[i]]});
  return out;
}

}  // namespace ejoin

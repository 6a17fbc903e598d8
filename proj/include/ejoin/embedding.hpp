#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ejoin/core.hpp"

namespace ejoin {

enum class ModelKind { synthetic, lookup };

/// What a lookup model does with a token missing from its table.
enum class OovPolicy { error, synthetic };

/// FNV-1a 64-bit hash of the token bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// The synthetic recipe: splitmix64 stream seeded by fnv1a64(token) ^ seed,
/// mapped to [-1, 1), narrowed to fp32 and L2-normalized in fp32. Writes
/// out.size() components. Does not touch any call counter.
void synthetic_vector(std::string_view token, std::uint64_t seed, std::span<float> out);

/// Deterministic token -> vector function with an invocation counter.
///
/// The model never memoizes: every embed() call pays the full cost and bumps
/// call_count(). Operators that want to avoid repeated embedding have to cache
/// vectors themselves.
class EmbeddingModel {
 public:
  using Table = std::unordered_map<std::string, std::vector<float>>;

  /// latency_ns adds a busy-wait per call to emulate expensive models.
  static EmbeddingModel synthetic(std::uint64_t seed, std::size_t dim,
                                  std::uint64_t latency_ns = 0);
  /// Every table vector must have exactly dim components.
  static EmbeddingModel lookup(std::size_t dim, Table table,
                               OovPolicy oov = OovPolicy::error, std::uint64_t seed = 0);

  EmbeddingModel(EmbeddingModel&& other) noexcept;
  EmbeddingModel& operator=(EmbeddingModel&& other) noexcept;
  EmbeddingModel(const EmbeddingModel&) = delete;
  EmbeddingModel& operator=(const EmbeddingModel&) = delete;

  std::vector<float> embed(std::string_view token) const;
  /// Same as embed() but writes into caller storage of exactly dim() floats.
  void embed_into(std::string_view token, std::span<float> out) const;

  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t latency_ns() const noexcept { return latency_ns_; }
  OovPolicy oov_policy() const noexcept { return oov_; }
  std::size_t vocabulary_size() const noexcept { return table_.size(); }
  bool contains(std::string_view token) const;

  std::uint64_t call_count() const noexcept { return calls_.load(std::memory_order_relaxed); }

 private:
  EmbeddingModel(ModelKind kind, std::size_t dim, std::uint64_t seed, std::uint64_t latency_ns,
                 Table table, OovPolicy oov);

  ModelKind kind_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::uint64_t latency_ns_;
  Table table_;
  OovPolicy oov_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Row i = model.embed(token i); exactly |R| model calls. Not normalized.
EmbeddedRelation embed_relation(const EmbeddingModel& model, const RawRelation& r);

/// Lookup-table inverse of embedding at token granularity.
const std::string& decode(const RawRelation& r, Offset offset);

/// word2vec text format. Duplicate tokens: the last occurrence wins.
EmbeddingModel load_vec(std::istream& in, OovPolicy oov = OovPolicy::error,
                        std::uint64_t seed = 0);
EmbeddingModel load_vec_file(const std::filesystem::path& path,
                             OovPolicy oov = OovPolicy::error, std::uint64_t seed = 0);

struct ScoredToken {
  std::string token;
  float similarity;
};

/// The k tokens of raw most similar to probe, highest first; ties go to the
/// lower offset. One model call for the probe.
std::vector<ScoredToken> top_k(const EmbeddingModel& model, const EmbeddedRelation& er,
                               const RawRelation& raw, std::string_view probe, std::size_t k);

}  // namespace ejoin

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ejoin/core.hpp"
#include "ejoin/embedding.hpp"
#include "ejoin/linalg.hpp"

namespace ejoin {

enum class JoinAlgo { naive_nlj, prefetch_nlj, tensor };
enum class InnerRelation { left, right };

/// Which relation runs in the inner loop. automatic puts the smaller one inside
/// (ties keep the right relation inner).
enum class InnerChoice { automatic, left, right };

std::string_view to_string(JoinAlgo algo) noexcept;
std::string_view to_string(InnerRelation inner) noexcept;
/// Accepts "naive", "naive_nlj", "prefetch", "prefetch_nlj", "tensor".
JoinAlgo parse_join_algo(std::string_view text);

struct JoinStats {
  std::uint64_t wall_nanos = 0;
  std::uint64_t model_calls_left = 0;
  std::uint64_t model_calls_right = 0;
  std::uint64_t pairs_compared = 0;
  std::uint64_t matches = 0;
  std::uint64_t peak_buffer_bytes = 0;
  std::uint64_t threads = 1;
  std::uint64_t tiles = 0;
  std::uint64_t repaired_rows = 0;
  JoinAlgo algo = JoinAlgo::prefetch_nlj;
  InnerRelation inner_relation = InnerRelation::right;

  std::uint64_t model_calls() const noexcept { return model_calls_left + model_calls_right; }
};

struct JoinResult {
  MatchSet matches;
  JoinStats stats;
};

struct JoinOptions {
  std::size_t threads = 1;
  /// Per-worker bound on the dense similarity buffer (tensor only).
  std::uint64_t budget_bytes = std::uint64_t{64} << 20;
  InnerChoice inner = InnerChoice::automatic;
  /// Best effort; ignored where the platform has no affinity API.
  bool pin_threads = false;
};

/// Tile grid realizing Buffer = |part(R)| x |part(S)| under a byte budget.
struct BatchPlan {
  std::size_t left_block_rows = 1;
  std::size_t right_block_rows = 1;
  std::vector<Tile> tiles;  // row-major over (left block, right block)
  std::uint64_t buffer_elems = 0;
  std::uint64_t budget_bytes = 0;
};

/// Blocks as square as the budget allows: b = floor(sqrt(budget / 4)),
/// left = min(b, left_rows), right = min(budget_elems / left, right_rows).
/// Throws BudgetTooSmall below 4 bytes.
BatchPlan plan_batches(std::size_t left_rows, std::size_t right_rows, std::size_t dim,
                       std::uint64_t budget_bytes);

/// sigma over E(R): every tuple whose cosine to probe is >= threshold, as
/// matches (offset, 0). |R| + 1 model calls.
JoinResult e_selection(const RawRelation& raw, const EmbeddingModel& model,
                       std::string_view probe, Threshold threshold);

/// Embeds inside the loops: the outer tuple once per outer iteration and the
/// inner tuple once per pair. Single-threaded.
JoinResult nlj_naive(const RawRelation& left, const RawRelation& right,
                     const EmbeddingModel& model, Threshold threshold,
                     InnerChoice inner = InnerChoice::automatic);

/// Embeds both relations once, then compares all pairs with cosine_vv. The
/// outer relation is row-partitioned across options.threads workers.
JoinResult nlj_prefetch(const RawRelation& left, const RawRelation& right,
                        const EmbeddingModel& model, Threshold threshold,
                        const JoinOptions& options = {});

/// Embeds once, normalizes, then runs the planned tiles through
/// tile_similarity + threshold_scan. Each worker owns one reusable buffer.
/// Reported similarities come from cosine_vv so output is bitwise comparable
/// with the nested-loop formulations.
JoinResult tensor_join(const RawRelation& left, const RawRelation& right,
                       const EmbeddingModel& model, Threshold threshold,
                       const JoinOptions& options = {});

JoinResult run_join(JoinAlgo algo, const RawRelation& left, const RawRelation& right,
                    const EmbeddingModel& model, Threshold threshold,
                    const JoinOptions& options = {});

}  // namespace ejoin

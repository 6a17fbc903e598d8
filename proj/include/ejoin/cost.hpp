#pragma once

#include <cstdint>
#include <string>

#include "ejoin/embedding.hpp"
#include "ejoin/join.hpp"

namespace ejoin {

/// Per-operation constants of the analytic cost model, in nanoseconds.
/// Comparison cost is affine in the embedding dim: C(dim) = base + per_dim * dim.
struct CostParams {
  double access_ns = 1.0;           // A: one tuple-row touch
  double model_ns = 1.0;            // M: one embed call
  double compare_base_ns = 0.0;     // c0
  double compare_per_dim_ns = 1.0;  // c1
  double tensor_efficiency = 1.0;   // kappa in (0, 1]

  double compare_ns(std::size_t dim) const noexcept {
    return compare_base_ns + compare_per_dim_ns * static_cast<double>(dim);
  }
  /// Throws InvalidArgument on negative fields or kappa outside (0, 1].
  void validate() const;
};

std::string to_json(const CostParams& p);
/// Throws ParseError on malformed JSON, missing fields or invalid values.
CostParams cost_params_from_json(const std::string& text);

/// |R| (A + M + C)
double estimate_selection(std::uint64_t r, std::size_t dim, const CostParams& p);
/// |R| |S| (A + M + C)
double estimate_nlj_naive(std::uint64_t r, std::uint64_t s, std::size_t dim,
                          const CostParams& p);
/// |R| |S| (A + C) + (|R| + |S|) M
double estimate_nlj_prefetch(std::uint64_t r, std::uint64_t s, std::size_t dim,
                             const CostParams& p);
/// |R| |S| (A + kappa C) + (|R| + |S|) M + A * sum over planned tiles of the
/// rows each tile re-touches.
double estimate_tensor(std::uint64_t r, std::uint64_t s, std::size_t dim,
                       std::uint64_t budget_bytes, const CostParams& p);

struct PlanChoice {
  JoinAlgo algo = JoinAlgo::tensor;
  double naive_ns = 0.0;
  double prefetch_ns = 0.0;
  double tensor_ns = 0.0;
};

/// Argmin of the three estimates; ties prefer tensor, then prefetch.
PlanChoice choose_plan(std::uint64_t r, std::uint64_t s, std::size_t dim,
                       std::uint64_t budget_bytes, const CostParams& p);

std::string to_json(const PlanChoice& choice);

struct CalibrationOptions {
  std::size_t sample_size = 1000;  // rows scanned / embed calls / cosine pairs
  std::size_t repetitions = 5;
  std::size_t kappa_block = 1024;  // side of the square block timed for kappa
};

/// Measures A, M, c0/c1 and kappa on this machine (medians of repetitions).
/// Single-threaded. Bumps the model's call counter by sample_size * repetitions.
CostParams calibrate(const EmbeddingModel& model, std::size_t dim,
                     const CalibrationOptions& options = {});

}  // namespace ejoin

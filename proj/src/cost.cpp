#include "ejoin/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ejoin/linalg.hpp"

namespace ejoin {

using nlohmann::json;

void CostParams::validate() const {
  const double fields[] = {access_ns, model_ns, compare_base_ns, compare_per_dim_ns,
                           tensor_efficiency};
  for (double f : fields) {
    if (!std::isfinite(f) || f < 0.0) throw InvalidArgument("cost parameters must be >= 0");
  }
  if (!(tensor_efficiency > 0.0 && tensor_efficiency <= 1.0))
    throw InvalidArgument("tensor_efficiency must lie in (0, 1]");
}

std::string to_json(const CostParams& p) {
  json j = {{"access_ns", p.access_ns},
            {"model_ns", p.model_ns},
            {"compare_base_ns", p.compare_base_ns},
            {"compare_per_dim_ns", p.compare_per_dim_ns},
            {"tensor_efficiency", p.tensor_efficiency}};
  return j.dump();
}

CostParams cost_params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("cost params: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "cost params must be a JSON object");
  auto field = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_number())
      throw ParseError(0, std::string("cost params: missing numeric field '") + name + "'");
    return j[name].get<double>();
  };
  CostParams p;
  p.access_ns = field("access_ns");
  p.model_ns = field("model_ns");
  p.compare_base_ns = field("compare_base_ns");
  p.compare_per_dim_ns = field("compare_per_dim_ns");
  p.tensor_efficiency = field("tensor_efficiency");
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(0, e.what());
  }
  return p;
}

double estimate_selection(std::uint64_t r, std::size_t dim, const CostParams& p) {
  return static_cast<double>(r) * (p.access_ns + p.model_ns + p.compare_ns(dim));
}

double estimate_nlj_naive(std::uint64_t r, std::uint64_t s, std::size_t dim,
                          const CostParams& p) {
  return static_cast<double>(r) * static_cast<double>(s) *
         (p.access_ns + p.model_ns + p.compare_ns(dim));
}

double estimate_nlj_prefetch(std::uint64_t r, std::uint64_t s, std::size_t dim,
                             const CostParams& p) {
  const double rd = static_cast<double>(r);
  const double sd = static_cast<double>(s);
  return rd * sd * (p.access_ns + p.compare_ns(dim)) + (rd + sd) * p.model_ns;
}

double estimate_tensor(std::uint64_t r, std::uint64_t s, std::size_t dim,
                       std::uint64_t budget_bytes, const CostParams& p) {
  const double rd = static_cast<double>(r);
  const double sd = static_cast<double>(s);
  const BatchPlan plan = plan_batches(r, s, dim, budget_bytes);
  // Closed form of the per-tile row touches: each left row is re-read once per
  // column block and each right row once per row block.
  const double left_blocks = r == 0 ? 0.0 : std::ceil(rd / static_cast<double>(plan.left_block_rows));
  const double right_blocks = s == 0 ? 0.0 : std::ceil(sd / static_cast<double>(plan.right_block_rows));
  const double touched = r == 0 || s == 0 ? 0.0 : rd * right_blocks + sd * left_blocks;
  return rd * sd * (p.access_ns + p.tensor_efficiency * p.compare_ns(dim)) +
         (rd + sd) * p.model_ns + p.access_ns * touched;
}

PlanChoice choose_plan(std::uint64_t r, std::uint64_t s, std::size_t dim,
                       std::uint64_t budget_bytes, const CostParams& p) {
  PlanChoice c;
  c.naive_ns = estimate_nlj_naive(r, s, dim, p);
  c.prefetch_ns = estimate_nlj_prefetch(r, s, dim, p);
  c.tensor_ns = estimate_tensor(r, s, dim, budget_bytes, p);
  c.algo = JoinAlgo::tensor;
  double best = c.tensor_ns;
  if (c.prefetch_ns < best) {
    best = c.prefetch_ns;
    c.algo = JoinAlgo::prefetch_nlj;
  }
  if (c.naive_ns < best) c.algo = JoinAlgo::naive_nlj;
  return c;
}

std::string to_json(const PlanChoice& choice) {
  json j = {{"naive_nlj_ns", choice.naive_ns},
            {"prefetch_nlj_ns", choice.prefetch_ns},
            {"tensor_ns", choice.tensor_ns},
            {"chosen", std::string(to_string(choice.algo))}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double median_ns(std::size_t reps, Fn&& fn) {
  std::vector<double> samples;
  samples.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    samples.push_back(std::chrono::duration<double, std::nano>(Clock::now() - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

EmbeddedRelation synthetic_block(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::vector<float> data(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) {
    synthetic_vector("calib_" + std::to_string(i), seed,
                     std::span<float>(data.data() + i * dim, dim));
  }
  return EmbeddedRelation(std::move(data), dim, true, "calibration");
}

volatile float g_sink = 0.0f;

double cosine_pair_ns(const EmbeddedRelation& m, std::size_t pairs, std::size_t reps) {
  const std::size_t rows = m.rows();
  const double total = median_ns(reps, [&] {
    float acc = 0.0f;
    for (std::size_t p = 0; p < pairs; ++p) acc += cosine_vv(m.row(p % rows), m.row((p * 7 + 1) % rows));
    g_sink = acc;
  });
  return total / static_cast<double>(pairs);
}

}  // namespace

CostParams calibrate(const EmbeddingModel& model, std::size_t dim,
                     const CalibrationOptions& options) {
  if (options.sample_size < 100) throw InvalidArgument("calibration sample size must be >= 100");
  if (options.repetitions == 0) throw InvalidArgument("calibration needs at least one repetition");
  if (dim == 0) throw InvalidArgument("embedding dimension must be positive");
  const std::size_t n = options.sample_size;
  const std::size_t reps = options.repetitions;
  CostParams p;

  const EmbeddedRelation block = synthetic_block(n, dim, 17);
  p.access_ns = median_ns(reps, [&] {
                  float acc = 0.0f;
                  for (std::size_t i = 0; i < n; ++i) {
                    const auto row = block.row(i);
                    acc += row.front() + row.back();
                  }
                  g_sink = acc;
                }) / static_cast<double>(n);

  std::vector<float> vec(model.dim());
  p.model_ns = median_ns(reps, [&] {
                 for (std::size_t i = 0; i < n; ++i) model.embed_into("calib_" + std::to_string(i), vec);
               }) / static_cast<double>(n);

  const EmbeddedRelation wide = synthetic_block(n, 2 * dim, 17);
  const double c_lo = cosine_pair_ns(block, n, reps);
  const double c_hi = cosine_pair_ns(wide, n, reps);
  p.compare_per_dim_ns = std::max(0.0, (c_hi - c_lo) / static_cast<double>(dim));
  p.compare_base_ns = std::max(0.0, c_lo - p.compare_per_dim_ns * static_cast<double>(dim));

  const std::size_t side = std::max<std::size_t>(options.kappa_block, 1);
  const EmbeddedRelation square = synthetic_block(side, dim, 29);
  std::vector<float> out(side * side);
  const Tile tile{0, side, 0, side};
  const double tiled = median_ns(reps, [&] { tile_similarity(square, square, tile, out); });
  const double scalar = median_ns(reps, [&] {
    for (std::size_t i = 0; i < side; ++i)
      for (std::size_t j = 0; j < side; ++j) out[i * side + j] = cosine_vv(square.row(i), square.row(j));
  });
  g_sink = out[side * side / 2];
  p.tensor_efficiency = std::clamp(tiled / std::max(scalar, 1.0), 1e-6, 1.0);
  return p;
}

}  // namespace ejoin

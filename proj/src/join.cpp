#include "ejoin/join.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace ejoin {

std::string_view to_string(JoinAlgo algo) noexcept {
  switch (algo) {
    case JoinAlgo::naive_nlj: return "naive_nlj";
    case JoinAlgo::prefetch_nlj: return "prefetch_nlj";
    case JoinAlgo::tensor: return "tensor";
  }
  return "unknown";
}

std::string_view to_string(InnerRelation inner) noexcept {
  return inner == InnerRelation::left ? "left" : "right";
}

JoinAlgo parse_join_algo(std::string_view text) {
  if (text == "naive" || text == "naive_nlj") return JoinAlgo::naive_nlj;
  if (text == "prefetch" || text == "prefetch_nlj") return JoinAlgo::prefetch_nlj;
  if (text == "tensor") return JoinAlgo::tensor;
  throw InvalidArgument("unknown join algorithm '" + std::string(text) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t nanos_since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

// Zero-norm embeddings get component 0 forced to 1, the same rule
// normalize_in_place applies, so cosine_vv is defined for every row.
bool repair_degenerate(std::span<float> v) {
  if (v.empty()) return false;
  float sq = 0.0f;
  for (float x : v) sq += x * x;
  if (std::sqrt(sq) >= 1e-12f) return false;
  v[0] = 1.0f;
  return true;
}

std::size_t repair_rows(std::vector<float>& data, std::size_t dim) {
  std::size_t repaired = 0;
  for (std::size_t off = 0; off < data.size(); off += dim) {
    if (repair_degenerate(std::span<float>(data.data() + off, dim))) ++repaired;
  }
  return repaired;
}

InnerRelation resolve_inner(InnerChoice choice, std::size_t left_rows, std::size_t right_rows) {
  switch (choice) {
    case InnerChoice::left: return InnerRelation::left;
    case InnerChoice::right: return InnerRelation::right;
    case InnerChoice::automatic: break;
  }
  return left_rows < right_rows ? InnerRelation::left : InnerRelation::right;
}

void pin_current_thread(std::size_t worker) {
#if defined(__linux__)
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(static_cast<int>(worker % cores), &set);
  pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#else
  (void)worker;
#endif
}

// Runs fn(worker) on `workers` threads and rethrows the first failure.
template <typename Fn>
void run_workers(std::size_t workers, bool pin, Fn&& fn) {
  if (workers <= 1) {
    if (pin) pin_current_thread(0);
    fn(std::size_t{0});
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          if (pin) pin_current_thread(w);
          fn(w);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

MatchSet gather(std::vector<std::vector<Match>>& sinks, const RawRelation& left,
                const RawRelation& right) {
  MatchSet out;
  out.left_name = left.name();
  out.right_name = right.name();
  std::size_t total = 0;
  for (const auto& s : sinks) total += s.size();
  out.matches.reserve(total);
  for (auto& s : sinks) out.matches.insert(out.matches.end(), s.begin(), s.end());
  return canonicalize(std::move(out));
}

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace

BatchPlan plan_batches(std::size_t left_rows, std::size_t right_rows, std::size_t /*dim*/,
                       std::uint64_t budget_bytes) {
  const std::uint64_t budget_elems = budget_bytes / sizeof(float);
  if (budget_elems == 0) throw BudgetTooSmall(budget_bytes);

  const std::uint64_t side = isqrt(budget_elems);
  BatchPlan plan;
  plan.budget_bytes = budget_bytes;
  plan.left_block_rows =
      static_cast<std::size_t>(std::min<std::uint64_t>(side, std::max<std::size_t>(left_rows, 1)));
  plan.right_block_rows = static_cast<std::size_t>(std::min<std::uint64_t>(
      budget_elems / plan.left_block_rows, std::max<std::size_t>(right_rows, 1)));

  for (std::size_t l = 0; l < left_rows; l += plan.left_block_rows) {
    const std::size_t lc = std::min(plan.left_block_rows, left_rows - l);
    for (std::size_t r = 0; r < right_rows; r += plan.right_block_rows) {
      const std::size_t rc = std::min(plan.right_block_rows, right_rows - r);
      plan.tiles.push_back({l, lc, r, rc});
      plan.buffer_elems = std::max<std::uint64_t>(plan.buffer_elems, lc * rc);
    }
  }
  return plan;
}

JoinResult e_selection(const RawRelation& raw, const EmbeddingModel& model,
                       std::string_view probe, Threshold threshold) {
  const auto start = Clock::now();
  JoinResult result;
  result.stats.algo = JoinAlgo::prefetch_nlj;
  result.matches.left_name = raw.name();
  result.matches.right_name = std::string(probe);

  const auto calls_before = model.call_count();
  auto query = model.embed(probe);
  result.stats.model_calls_right = model.call_count() - calls_before;
  result.stats.repaired_rows += repair_degenerate(query);

  std::vector<float> vec(model.dim());
  const auto scan_before = model.call_count();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    model.embed_into(raw.tokens()[i], vec);
    result.stats.repaired_rows += repair_degenerate(vec);
    const float sim = cosine_vv(vec, query);
    if (threshold.admits(sim)) result.matches.matches.push_back({i, 0, sim});
  }
  result.stats.model_calls_left = model.call_count() - scan_before;
  result.stats.pairs_compared = raw.size();
  result.stats.matches = result.matches.size();
  result.stats.wall_nanos = nanos_since(start);
  return result;
}

JoinResult nlj_naive(const RawRelation& left, const RawRelation& right,
                     const EmbeddingModel& model, Threshold threshold, InnerChoice inner) {
  const auto start = Clock::now();
  JoinResult result;
  auto& stats = result.stats;
  stats.algo = JoinAlgo::naive_nlj;
  stats.inner_relation = resolve_inner(inner, left.size(), right.size());

  const bool left_outer = stats.inner_relation == InnerRelation::right;
  const RawRelation& outer = left_outer ? left : right;
  const RawRelation& inner_rel = left_outer ? right : left;
  std::uint64_t outer_calls = 0;
  std::uint64_t inner_calls = 0;

  std::vector<Match> sink;
  // No pairs exist, so nothing is embedded.
  const std::size_t outer_rows = inner_rel.empty() ? 0 : outer.size();
  std::vector<float> outer_vec(model.dim());
  std::vector<float> inner_vec(model.dim());
  for (std::size_t o = 0; o < outer_rows; ++o) {
    auto before = model.call_count();
    model.embed_into(outer.tokens()[o], outer_vec);
    outer_calls += model.call_count() - before;
    stats.repaired_rows += repair_degenerate(outer_vec);
    for (std::size_t i = 0; i < inner_rel.size(); ++i) {
      before = model.call_count();
      model.embed_into(inner_rel.tokens()[i], inner_vec);
      inner_calls += model.call_count() - before;
      stats.repaired_rows += repair_degenerate(inner_vec);
      const float sim = left_outer ? cosine_vv(outer_vec, inner_vec)
                                   : cosine_vv(inner_vec, outer_vec);
      if (threshold.admits(sim)) {
        sink.push_back(left_outer ? Match{o, i, sim} : Match{i, o, sim});
      }
    }
  }

  std::vector<std::vector<Match>> sinks{std::move(sink)};
  result.matches = gather(sinks, left, right);
  stats.model_calls_left = left_outer ? outer_calls : inner_calls;
  stats.model_calls_right = left_outer ? inner_calls : outer_calls;
  stats.pairs_compared = static_cast<std::uint64_t>(left.size()) * right.size();
  stats.matches = result.matches.size();
  stats.wall_nanos = nanos_since(start);
  return result;
}

namespace {

struct Prefetched {
  std::vector<float> left;
  std::vector<float> right;
  std::uint64_t calls_left = 0;
  std::uint64_t calls_right = 0;
  std::size_t repaired = 0;
};

std::vector<float> take_data(const EmbeddedRelation& er) {
  return {er.data().begin(), er.data().end()};
}

Prefetched prefetch(const RawRelation& left, const RawRelation& right,
                    const EmbeddingModel& model) {
  Prefetched p;
  auto before = model.call_count();
  p.left = take_data(embed_relation(model, left));
  p.calls_left = model.call_count() - before;
  before = model.call_count();
  p.right = take_data(embed_relation(model, right));
  p.calls_right = model.call_count() - before;
  p.repaired = repair_rows(p.left, model.dim()) + repair_rows(p.right, model.dim());
  return p;
}

std::size_t worker_count(std::size_t threads, std::size_t units) {
  if (threads == 0) throw InvalidArgument("threads must be at least 1");
  return std::max<std::size_t>(1, std::min(threads, units));
}

}  // namespace

JoinResult nlj_prefetch(const RawRelation& left, const RawRelation& right,
                        const EmbeddingModel& model, Threshold threshold,
                        const JoinOptions& options) {
  const auto start = Clock::now();
  JoinResult result;
  auto& stats = result.stats;
  stats.algo = JoinAlgo::prefetch_nlj;
  stats.threads = options.threads;
  stats.inner_relation = resolve_inner(options.inner, left.size(), right.size());
  const std::size_t workers = worker_count(options.threads, std::max(left.size(), right.size()));

  const auto emb = prefetch(left, right, model);
  stats.model_calls_left = emb.calls_left;
  stats.model_calls_right = emb.calls_right;
  stats.repaired_rows = emb.repaired;

  const std::size_t dim = model.dim();
  const bool left_outer = stats.inner_relation == InnerRelation::right;
  const std::size_t outer_rows = left_outer ? left.size() : right.size();
  const std::size_t inner_rows = left_outer ? right.size() : left.size();
  const float* outer_data = left_outer ? emb.left.data() : emb.right.data();
  const float* inner_data = left_outer ? emb.right.data() : emb.left.data();

  std::vector<std::vector<Match>> sinks(workers);
  run_workers(workers, options.pin_threads, [&](std::size_t w) {
    const std::size_t begin = outer_rows * w / workers;
    const std::size_t end = outer_rows * (w + 1) / workers;
    auto& sink = sinks[w];
    for (std::size_t o = begin; o < end; ++o) {
      const std::span<const float> ov(outer_data + o * dim, dim);
      for (std::size_t i = 0; i < inner_rows; ++i) {
        const std::span<const float> iv(inner_data + i * dim, dim);
        const float sim = left_outer ? cosine_vv(ov, iv) : cosine_vv(iv, ov);
        if (threshold.admits(sim)) sink.push_back(left_outer ? Match{o, i, sim} : Match{i, o, sim});
      }
    }
  });

  result.matches = gather(sinks, left, right);
  stats.pairs_compared = static_cast<std::uint64_t>(left.size()) * right.size();
  stats.matches = result.matches.size();
  stats.wall_nanos = nanos_since(start);
  return result;
}

JoinResult tensor_join(const RawRelation& left, const RawRelation& right,
                       const EmbeddingModel& model, Threshold threshold,
                       const JoinOptions& options) {
  const auto start = Clock::now();
  if (options.threads == 0) throw InvalidArgument("threads must be at least 1");
  const BatchPlan plan = plan_batches(left.size(), right.size(), model.dim(), options.budget_bytes);

  JoinResult result;
  auto& stats = result.stats;
  stats.algo = JoinAlgo::tensor;
  stats.threads = options.threads;
  stats.tiles = plan.tiles.size();

  const std::size_t dim = model.dim();
  auto before = model.call_count();
  const EmbeddedRelation left_emb = embed_relation(model, left);
  stats.model_calls_left = model.call_count() - before;
  before = model.call_count();
  const EmbeddedRelation right_emb = embed_relation(model, right);
  stats.model_calls_right = model.call_count() - before;

  auto left_norm = normalize_rows(left_emb);
  auto right_norm = normalize_rows(right_emb);
  stats.repaired_rows = left_norm.repaired_rows + right_norm.repaired_rows;
  auto left_raw = take_data(left_emb);
  auto right_raw = take_data(right_emb);
  repair_rows(left_raw, dim);
  repair_rows(right_raw, dim);

  // Fewer tiles than workers: split tiles along left rows so every worker
  // gets a share without exceeding the per-worker budget.
  std::vector<Tile> units;
  const std::size_t want = options.threads;
  if (!plan.tiles.empty() && plan.tiles.size() < want) {
    const std::size_t pieces = (want + plan.tiles.size() - 1) / plan.tiles.size();
    for (const Tile& t : plan.tiles) {
      const std::size_t n = std::min(pieces, t.left_row_count);
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t b = t.left_row_count * p / n;
        const std::size_t e = t.left_row_count * (p + 1) / n;
        units.push_back({t.left_row_start + b, e - b, t.right_row_start, t.right_row_count});
      }
    }
  } else {
    units = plan.tiles;
  }
  std::size_t unit_elems = 0;
  for (const Tile& t : units) unit_elems = std::max(unit_elems, t.area());

  const std::size_t workers = units.empty() ? 0 : worker_count(options.threads, units.size());
  stats.peak_buffer_bytes = static_cast<std::uint64_t>(workers) * unit_elems * sizeof(float);

  std::vector<std::vector<Match>> sinks(workers);
  std::atomic<std::size_t> next{0};
  if (workers > 0) {
    run_workers(workers, options.pin_threads, [&](std::size_t w) {
      std::vector<float> buffer(unit_elems);
      std::vector<Match> candidates;
      auto& sink = sinks[w];
      for (std::size_t u = next.fetch_add(1); u < units.size(); u = next.fetch_add(1)) {
        const Tile& tile = units[u];
        tile_similarity(left_norm.relation, right_norm.relation, tile, buffer);
        candidates.clear();
        threshold_scan(buffer, tile, threshold, candidates);
        for (const Match& c : candidates) {
          const float sim = cosine_vv({left_raw.data() + c.left * dim, dim},
                                      {right_raw.data() + c.right * dim, dim});
          if (threshold.admits(sim)) sink.push_back({c.left, c.right, sim});
        }
      }
    });
  }

  result.matches = gather(sinks, left, right);
  stats.pairs_compared = static_cast<std::uint64_t>(left.size()) * right.size();
  stats.matches = result.matches.size();
  stats.wall_nanos = nanos_since(start);
  return result;
}

JoinResult run_join(JoinAlgo algo, const RawRelation& left, const RawRelation& right,
                    const EmbeddingModel& model, Threshold threshold,
                    const JoinOptions& options) {
  switch (algo) {
    case JoinAlgo::naive_nlj: {
      auto r = nlj_naive(left, right, model, threshold, options.inner);
      r.stats.threads = 1;
      return r;
    }
    case JoinAlgo::prefetch_nlj: return nlj_prefetch(left, right, model, threshold, options);
    case JoinAlgo::tensor: return tensor_join(left, right, model, threshold, options);
  }
  throw InvalidArgument("unknown join algorithm");
}

}  // namespace ejoin

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// gating criterion fails. Report-only items print REPORT lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ejoin/bench.hpp"
#include "ejoin/cost.hpp"
#include "ejoin/join.hpp"
#include "ejoin/linalg.hpp"
#include "support/oracle.hpp"

using namespace ejoin;
namespace t = ejoin::testing;

namespace {

using Clock = std::chrono::steady_clock;
constexpr std::uint64_t kMiB = std::uint64_t{1} << 20;

struct Outcome {
  bool pass = true;
  std::string detail;
  bool report_only = false;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::uint64_t median(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

template <typename Fn>
std::uint64_t median_wall(std::size_t reps, Fn&& run_once) {
  std::vector<std::uint64_t> times;
  for (std::size_t i = 0; i < reps; ++i) times.push_back(run_once());
  return median(times);
}

// ---------------------------------------------------------------------------
// Criteria 1 + 2: exactness oracle and model-call accounting
// ---------------------------------------------------------------------------

struct ExactnessTotals {
  Outcome exact;
  Outcome calls;
};

ExactnessTotals exactness_and_calls() {
  ExactnessTotals out;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> card(8, 256);
  const std::size_t dims[] = {4, 64, 100};
  std::size_t runs = 0, exact_fail = 0, call_fail = 0, total_matches = 0;

  for (int instance = 0; instance < 50; ++instance) {
    const std::size_t dim = dims[instance % 3];
    const auto model = EmbeddingModel::synthetic(rng(), dim);
    const auto left = make_raw_relation("R", t::random_tokens(rng, card(rng), 64));
    const auto right = make_raw_relation("S", t::random_tokens(rng, card(rng), 64));
    const auto sims = t::all_similarities(left, right, model);
    const double theta_d = t::threshold_with_margin(sims, 1e-4, 0.02);
    if (std::isnan(theta_d)) {
      ++exact_fail;
      continue;
    }
    const Threshold theta(static_cast<float>(theta_d));
    const auto expected = t::brute_force(sims, right.size(), theta_d);
    total_matches += expected.size();

    auto agrees_with_oracle = [&](const MatchSet& m) {
      if (m.size() != expected.size()) return false;
      for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& a = m.matches[i];
        if (a.left != expected[i].left || a.right != expected[i].right) return false;
        if (std::abs(a.similarity - expected[i].similarity) > 1e-5) return false;
      }
      return true;
    };

    const std::uint64_t lr = left.size(), sr = right.size();
    auto check = [&](const JoinResult& res, const MatchSet* reference, std::uint64_t expected_calls,
                     std::uint64_t calls_before) {
      ++runs;
      if (!agrees_with_oracle(res.matches) || (reference && !identical(*reference, res.matches)))
        ++exact_fail;
      if (res.stats.model_calls() != expected_calls ||
          model.call_count() - calls_before != expected_calls)
        ++call_fail;
    };

    auto before = model.call_count();
    const auto naive = nlj_naive(left, right, model, theta);
    const std::uint64_t outer = naive.stats.inner_relation == InnerRelation::right ? lr : sr;
    const std::uint64_t inner = naive.stats.inner_relation == InnerRelation::right ? sr : lr;
    check(naive, nullptr, outer + outer * inner, before);

    for (std::size_t threads : {1, 4}) {
      before = model.call_count();
      check(nlj_prefetch(left, right, model, theta, {.threads = threads}), &naive.matches, lr + sr,
            before);
      const std::uint64_t whole = lr * sr * sizeof(float);
      for (std::uint64_t budget : {whole, whole / 4, std::uint64_t{4096} * sizeof(float)}) {
        before = model.call_count();
        const auto res =
            tensor_join(left, right, model, theta, {.threads = threads, .budget_bytes = budget});
        check(res, &naive.matches, lr + sr, before);
        if (res.stats.peak_buffer_bytes > threads * budget) ++exact_fail;
      }
    }
  }
  const double secs = seconds_since(t0);
  out.exact.pass = exact_fail == 0 && secs < 60.0;
  out.exact.detail = fmt("%zu runs over 50 instances, %zu disagreements, %zu oracle matches, %.1fs (< 60s)",
                         runs, exact_fail, total_matches, secs);
  out.calls.pass = call_fail == 0;
  out.calls.detail = fmt("%zu runs, %zu with wrong model-call counts", runs, call_fail);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: cost-model algebra
// ---------------------------------------------------------------------------

Outcome cost_algebra() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint64_t> card(2, 100000);
  std::uniform_int_distribution<std::size_t> dims(1, 1024);
  std::uniform_real_distribution<double> cost(0.0, 1000.0);
  std::uniform_real_distribution<double> kappa(1e-3, 1.0);
  std::size_t dominance_fail = 0, monotone_fail = 0, boundary = 0;

  using Est = std::function<double(std::uint64_t, std::uint64_t, std::size_t, const CostParams&)>;
  const std::vector<Est> estimates{
      [](auto r, auto s, auto d, const auto& p) { return estimate_nlj_naive(r, s, d, p); },
      [](auto r, auto s, auto d, const auto& p) { return estimate_nlj_prefetch(r, s, d, p); },
      [](auto r, auto s, auto d, const auto& p) { return estimate_tensor(r, s, d, 16 * kMiB, p); },
      [](auto r, auto, auto d, const auto& p) { return estimate_selection(r, d, p); }};

  for (int i = 0; i < 10000; ++i) {
    // Every 500th draw lands on the smallest cardinalities.
    const std::uint64_t r = i % 500 == 0 ? 2 + (i / 500) % 2 : card(rng);
    const std::uint64_t s = i % 500 == 0 ? 2 : card(rng);
    const std::size_t dim = dims(rng);
    CostParams p;
    p.access_ns = cost(rng);
    p.model_ns = cost(rng) + 1e-6;
    p.compare_base_ns = cost(rng);
    p.compare_per_dim_ns = cost(rng) / 100.0;
    p.tensor_efficiency = kappa(rng);

    const double pre = estimate_nlj_prefetch(r, s, dim, p);
    const double naive = estimate_nlj_naive(r, s, dim, p);
    if (r == 2 && s == 2) {
      // |R||S| - |R| - |S| = 0: the two formulas coincide up to rounding.
      ++boundary;
      if (std::abs(pre - naive) > 1e-12 * naive) ++dominance_fail;
    } else if (!(pre < naive)) {
      ++dominance_fail;
    }
    if (choose_plan(r, s, dim, 16 * kMiB, p).algo == JoinAlgo::naive_nlj) ++dominance_fail;

    for (const auto& est : estimates) {
      const double base = est(r, s, dim, p);
      auto bumped = [&](auto mutate) {
        CostParams q = p;
        mutate(q);
        return est(r, s, dim, q) >= base;
      };
      const bool ok = est(r + 1, s, dim, p) >= base && est(r, s + 1, dim, p) >= base &&
                      est(r, s, dim + 1, p) >= base &&
                      bumped([](CostParams& q) { q.access_ns += 1; }) &&
                      bumped([](CostParams& q) { q.model_ns += 1; }) &&
                      bumped([](CostParams& q) { q.compare_base_ns += 1; }) &&
                      bumped([](CostParams& q) { q.compare_per_dim_ns += 0.5; }) &&
                      bumped([](CostParams& q) {
                        q.tensor_efficiency = std::min(1.0, q.tensor_efficiency * 1.5);
                      });
      if (!ok) ++monotone_fail;
    }
  }
  Outcome o;
  o.pass = dominance_fail == 0 && monotone_fail == 0;
  o.detail = fmt("10^4 draws: %zu dominance violations, %zu monotonicity violations "
                 "(%zu draws at |R|=|S|=2 where prefetch == naive)",
                 dominance_fail, monotone_fail, boundary);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 4: batch invariance + budget compliance
// ---------------------------------------------------------------------------

Outcome batch_invariance() {
  const auto t0 = Clock::now();
  const std::size_t n = 4096, dim = 100, threads = 8;
  const auto model = EmbeddingModel::synthetic(4, dim);
  const RawRelation left("R", generate_tokens(n, 1));
  const RawRelation right("S", generate_tokens(n, 2));
  const Threshold theta(0.3f);
  const std::uint64_t whole = std::uint64_t{n} * n * sizeof(float);

  MatchSet reference;
  bool ok = true;
  std::string detail;
  for (std::uint64_t budget : {whole, 64 * kMiB, 16 * kMiB, 4 * kMiB, 1 * kMiB}) {
    const auto res = tensor_join(left, right, model, theta, {.threads = threads, .budget_bytes = budget});
    if (reference.empty() && budget == whole) reference = res.matches;
    const bool same = identical(reference, res.matches);
    const bool within = res.stats.peak_buffer_bytes <= threads * budget;
    ok = ok && same && within;
    detail += fmt("[%lluMiB: %llu matches, %llu tiles, peak %.1fMiB%s%s] ",
                  static_cast<unsigned long long>(budget / kMiB),
                  static_cast<unsigned long long>(res.stats.matches),
                  static_cast<unsigned long long>(res.stats.tiles),
                  res.stats.peak_buffer_bytes / double(kMiB), same ? "" : " DIFF",
                  within ? "" : " OVER");
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = ok && !reference.empty() && secs < 300.0;
  o.detail = detail + fmt("%.1fs (< 300s)", secs);
  return o;
}

// ---------------------------------------------------------------------------
// Criteria 5-7: timing gates
// ---------------------------------------------------------------------------

Outcome naive_vs_prefetch() {
  const auto t0 = Clock::now();
  const auto model = EmbeddingModel::synthetic(5, 100, 1000);
  const RawRelation left("R", generate_tokens(1024, 1));
  const RawRelation right("S", generate_tokens(1024, 2));
  const Threshold theta(0.3f);
  const auto naive = median_wall(5, [&] { return nlj_naive(left, right, model, theta).stats.wall_nanos; });
  const auto pre = median_wall(5, [&] {
    return nlj_prefetch(left, right, model, theta, {.threads = 1}).stats.wall_nanos;
  });
  const double ratio = double(naive) / double(pre);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = ratio >= 10.0 && secs < 120.0;
  o.detail = fmt("naive %.1fms / prefetch %.1fms = %.1fx (>= 10x), %.1fs (< 120s)", naive / 1e6,
                 pre / 1e6, ratio, secs);
  return o;
}

Outcome tensor_vs_prefetch() {
  const auto t0 = Clock::now();
  const auto model = EmbeddingModel::synthetic(6, 100);
  const RawRelation left("R", generate_tokens(4096, 1));
  const RawRelation right("S", generate_tokens(4096, 2));
  const Threshold theta(0.3f);
  const JoinOptions options{.threads = 8, .budget_bytes = 64 * kMiB};
  const auto pre = median_wall(5, [&] { return nlj_prefetch(left, right, model, theta, options).stats.wall_nanos; });
  const auto ten = median_wall(5, [&] { return tensor_join(left, right, model, theta, options).stats.wall_nanos; });
  const double ratio = double(ten) / double(pre);
  const double secs = seconds_since(t0);
  Outcome o;
  const bool has_vector_unit = kernel_isa() != "generic";
  o.pass = ratio <= 0.5 && secs < 300.0;
  o.detail = fmt("tensor %.1fms / prefetch %.1fms = %.3f (<= 0.5), kernel %s, %.1fs (< 300s)",
                 ten / 1e6, pre / 1e6, ratio, std::string(kernel_isa()).c_str(), secs);
  if (!has_vector_unit) {
    o.report_only = true;
    o.detail += " [waiver: no vector unit, report-only]";
  }
  return o;
}

Outcome scaling_linearity() {
  const auto model = EmbeddingModel::synthetic(7, 100);
  const Threshold theta(0.3f);
  auto timed = [&](std::size_t n) {
    const RawRelation left("R", generate_tokens(n, 1));
    const RawRelation right("S", generate_tokens(n, 2));
    return median_wall(5, [&] {
      return nlj_prefetch(left, right, model, theta, {.threads = 8}).stats.wall_nanos;
    });
  };
  const auto small = timed(1024);
  const auto large = timed(4096);
  const double ratio = double(large) / double(small);
  Outcome o;
  o.pass = ratio >= 8.0 && ratio <= 32.0;
  o.detail = fmt("prefetch 4096^2 %.1fms / 1024^2 %.1fms = %.2f (band [8, 32], ideal 16)",
                 large / 1e6, small / 1e6, ratio);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 8: kernel equivalences
// ---------------------------------------------------------------------------

Outcome kernel_equivalences() {
  std::mt19937_64 rng(88);
  std::normal_distribution<float> normal;
  auto vec = [&](std::size_t dim) {
    std::vector<float> v(dim);
    for (float& x : v) x = normal(rng);
    return v;
  };
  std::size_t norm_fail = 0, block_fail = 0, sym_fail = 0, scale_fail = 0;

  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 1 + rng() % 256;
    const auto a = vec(dim), b = vec(dim);
    const float c = cosine_vv(a, b);
    auto na = a, nb = b;
    normalize_in_place(na);
    normalize_in_place(nb);
    if (std::abs(c - dot(na, nb)) > 1e-5f) ++norm_fail;
    if (std::abs(c - cosine_vv(b, a)) > 1e-5f) ++sym_fail;
    for (float scale : {0.5f, 2.0f, 1000.0f}) {
      auto sa = a;
      for (float& x : sa) x *= scale;
      if (std::abs(cosine_vv(sa, b) - c) > 1e-5f) {
        ++scale_fail;
        break;
      }
    }
  }

  auto relation = [&](std::size_t rows, std::size_t dim) {
    std::vector<float> data;
    for (std::size_t r = 0; r < rows; ++r) {
      auto v = vec(dim);
      data.insert(data.end(), v.begin(), v.end());
    }
    return normalize_rows(EmbeddedRelation(std::move(data), dim, false, "k")).relation;
  };
  std::vector<float> buffer(64 * 64);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t rl = 1 + rng() % 64, rr = 1 + rng() % 64, dim = 1 + rng() % 16;
    const auto left = relation(rl, dim);
    const auto right = relation(rr, dim);
    const std::size_t bl = 1 + rng() % rl, br = 1 + rng() % rr;
    std::vector<float> full(rl * rr);
    for (std::size_t l = 0; l < rl; l += bl) {
      for (std::size_t r = 0; r < rr; r += br) {
        const Tile tile{l, std::min(bl, rl - l), r, std::min(br, rr - r)};
        tile_similarity(left, right, tile, buffer);
        for (std::size_t x = 0; x < tile.left_row_count; ++x)
          for (std::size_t y = 0; y < tile.right_row_count; ++y)
            full[(l + x) * rr + r + y] = buffer[x * tile.right_row_count + y];
      }
    }
    bool ok = true;
    for (std::size_t x = 0; x < rl && ok; ++x) {
      for (std::size_t y = 0; y < rr; ++y) {
        double ref = 0;
        for (std::size_t k = 0; k < dim; ++k) ref += double(left.row(x)[k]) * right.row(y)[k];
        if (std::abs(full[x * rr + y] - ref) > 1e-5) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) ++block_fail;
  }
  Outcome o;
  o.pass = norm_fail + block_fail + sym_fail + scale_fail == 0;
  o.detail = fmt("failures out of 10^4 each: normalized-dot %zu, block assembly %zu, symmetry %zu, "
                 "scale invariance %zu",
                 norm_fail, block_fail, sym_fail, scale_fail);
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 9: report-only artifacts
// ---------------------------------------------------------------------------

Outcome report_only_artifacts() {
  Outcome o;
  o.report_only = true;
  BenchOptions options;
  options.repetitions = 3;
  options.threads = 8;
  std::ostringstream detail;

  const auto e3 = run_experiment(Experiment::e3, Scale::desk, options);
  {
    std::ofstream csv("acceptance_e3_ordering.csv");
    write_bench_csv(csv, e3);
  }
  if (e3.size() == 2) {
    detail << fmt("e3 small-inner %.1fms vs large-inner %.1fms (%.1f%% difference); ",
                  e3[0].record.stats.wall_nanos / 1e6, e3[1].record.stats.wall_nanos / 1e6,
                  100.0 * (double(e3[1].record.stats.wall_nanos) / e3[0].record.stats.wall_nanos - 1.0));
  }

  const auto e5 = run_experiment(Experiment::e5, Scale::desk, options);
  {
    std::ofstream csv("acceptance_e5_per_fp32.csv");
    write_bench_csv(csv, e5);
  }
  detail << "per-FP32 grid: " << e5.size() << " rows written; "
         << "CSVs: acceptance_e3_ordering.csv, acceptance_e5_per_fp32.csv. "
         << "Not reproduced at desk scale: absolute runtimes, the 5.36x average SIMD gain, "
            "the ~35% ordering effect at 10^10 operations, Table 1 semantic matches.";
  o.pass = e3.size() == 2 && !e5.empty();
  o.detail = detail.str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  ExactnessTotals exact;
  const std::vector<Criterion> criteria{
      {"C1 exactness oracle", [&] { exact = exactness_and_calls(); return exact.exact; }},
      {"C2 model-call accounting", [&] { return exact.calls; }},
      {"C3 cost-model algebra", cost_algebra},
      {"C4 batch invariance + budget compliance", batch_invariance},
      {"C5 naive-vs-prefetch gap", naive_vs_prefetch},
      {"C6 tensor-vs-NLJ speedup", tensor_vs_prefetch},
      {"C7 scaling linearity", scaling_linearity},
      {"C8 kernel equivalences", kernel_equivalences},
      {"C9 report-only artifacts", report_only_artifacts},
  };

  std::cout << "kernel isa: " << kernel_isa() << '\n';
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.report_only = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const char* tag = o.report_only ? (o.pass ? "REPORT" : "REPORT-FAIL") : (o.pass ? "PASS" : "FAIL");
    std::cout << '[' << tag << "] " << c.name << ": " << o.detail << std::endl;
    if (!o.pass && !o.report_only) ++failures;
  }
  std::cout << (failures == 0 ? "all gating criteria passed" : "gating criteria failed: ")
            << (failures == 0 ? std::string() : std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}

#include "ejoin/bench.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ejoin/embedding.hpp"
#include "ejoin/join.hpp"

namespace ejoin {

Experiment parse_experiment(std::string_view text) {
  if (text == "e1") return Experiment::e1;
  if (text == "e2") return Experiment::e2;
  if (text == "e3") return Experiment::e3;
  if (text == "e4") return Experiment::e4;
  if (text == "e5") return Experiment::e5;
  throw InvalidArgument("unknown experiment '" + std::string(text) + "'");
}

Scale parse_scale(std::string_view text) {
  if (text == "desk") return Scale::desk;
  if (text == "paper") return Scale::paper;
  throw InvalidArgument("unknown scale '" + std::string(text) + "'");
}

std::vector<std::string> generate_tokens(std::size_t rows, std::uint64_t seed) {
  std::vector<std::string> tokens;
  tokens.reserve(rows);
  const std::string prefix = "tok_" + std::to_string(seed) + "_";
  for (std::size_t i = 0; i < rows; ++i) tokens.push_back(prefix + std::to_string(i));
  return tokens;
}

namespace {

constexpr std::uint64_t kMiB = std::uint64_t{1} << 20;

struct Config {
  std::string variant;
  JoinAlgo algo = JoinAlgo::prefetch_nlj;
  std::size_t left_rows = 0;
  std::size_t right_rows = 0;
  std::size_t dim = 100;
  float threshold = 0.3f;
  std::size_t threads = 1;
  std::uint64_t budget_bytes = 64 * kMiB;
  std::uint64_t latency_ns = 0;
  InnerChoice inner = InnerChoice::automatic;
  bool pin = false;
};

std::string model_spec_text(const Config& c, std::uint64_t seed) {
  std::string s = "synthetic:seed=" + std::to_string(seed) + ":dim=" + std::to_string(c.dim);
  if (c.latency_ns > 0) s += ":latency_ns=" + std::to_string(c.latency_ns);
  return s;
}

BenchRow run_config(std::string_view experiment, const Config& c, const BenchOptions& options) {
  const auto model = EmbeddingModel::synthetic(options.seed, c.dim, c.latency_ns);
  const RawRelation left("R", generate_tokens(c.left_rows, options.seed));
  const RawRelation right("S", generate_tokens(c.right_rows, options.seed + 1));
  JoinOptions jo;
  jo.threads = c.threads;
  jo.budget_bytes = c.budget_bytes;
  jo.inner = c.inner;
  jo.pin_threads = c.pin;

  const std::size_t reps = std::max<std::size_t>(options.repetitions, 1);
  std::vector<std::uint64_t> times;
  JoinStats last;
  for (std::size_t r = 0; r < reps; ++r) {
    auto result = run_join(c.algo, left, right, model, Threshold(c.threshold), jo);
    times.push_back(result.stats.wall_nanos);
    last = result.stats;
  }
  std::sort(times.begin(), times.end());
  last.wall_nanos = times[times.size() / 2];

  BenchRow row;
  row.experiment = std::string(experiment);
  row.variant = c.variant;
  row.repetitions = reps;
  row.wall_nanos_min = times.front();
  row.wall_nanos_max = times.back();
  const double fp32 = static_cast<double>(c.left_rows) * static_cast<double>(c.right_rows) *
                      static_cast<double>(c.dim);
  row.per_fp32_ns = fp32 > 0 ? static_cast<double>(last.wall_nanos) / fp32 : 0.0;
  row.record = make_run_record(last, c.left_rows, c.right_rows, c.dim, c.threshold,
                               c.algo == JoinAlgo::tensor ? c.budget_bytes : 0,
                               model_spec_text(c, options.seed), options.seed);
  if (options.progress) {
    *options.progress << experiment << ' ' << c.variant << ' ' << to_string(c.algo) << ' '
                      << c.left_rows << 'x' << c.right_rows << " dim=" << c.dim
                      << " median_ms=" << static_cast<double>(last.wall_nanos) / 1e6 << '\n';
  }
  return row;
}

std::vector<Config> configs_for(Experiment e, Scale scale, std::size_t threads) {
  const bool desk = scale == Scale::desk;
  std::vector<Config> out;
  switch (e) {
    case Experiment::e1: {
      const std::vector<std::size_t> sizes =
          desk ? std::vector<std::size_t>{256, 512, 1024} : std::vector<std::size_t>{10000, 100000};
      for (std::size_t n : sizes) {
        for (JoinAlgo algo : {JoinAlgo::naive_nlj, JoinAlgo::prefetch_nlj}) {
          Config c;
          c.variant = "latency_1000ns";
          c.algo = algo;
          c.left_rows = c.right_rows = n;
          c.latency_ns = 1000;
          out.push_back(c);
        }
      }
      break;
    }
    case Experiment::e2: {
      const std::size_t n = desk ? 2048 : 10000;
      std::vector<std::size_t> counts{1, 2, 4, 8};
      if (!desk) counts = {1, 2, 4, 8, 12, 16, 24, 28, 32, 48};
      for (bool pin : {false, true}) {
        for (std::size_t t : counts) {
          Config c;
          c.variant = pin ? "pinned" : "unpinned";
          c.left_rows = c.right_rows = n;
          c.threads = t;
          c.pin = pin;
          out.push_back(c);
        }
      }
      break;
    }
    case Experiment::e3: {
      const std::size_t big = desk ? 4096 : 100000;
      const std::size_t small = desk ? 512 : 10000;
      for (InnerChoice inner : {InnerChoice::right, InnerChoice::left}) {
        Config c;
        c.variant = inner == InnerChoice::right ? "small_inner" : "large_inner";
        c.left_rows = big;
        c.right_rows = small;
        c.inner = inner;
        c.threads = threads;
        out.push_back(c);
      }
      break;
    }
    case Experiment::e4: {
      const std::size_t n = desk ? 4096 : 100000;
      const std::uint64_t whole = std::uint64_t{n} * n * sizeof(float);
      std::vector<std::pair<std::string, std::uint64_t>> budgets{
          {"whole", whole}, {"64MiB", 64 * kMiB}, {"16MiB", 16 * kMiB}, {"4MiB", 4 * kMiB},
          {"1MiB", kMiB}};
      for (const auto& [name, bytes] : budgets) {
        Config c;
        c.variant = "budget_" + name;
        c.algo = JoinAlgo::tensor;
        c.left_rows = c.right_rows = n;
        c.threads = threads;
        c.budget_bytes = bytes;
        out.push_back(c);
      }
      break;
    }
    case Experiment::e5: {
      const std::vector<std::size_t> sizes =
          desk ? std::vector<std::size_t>{1024, 2048, 4096}
               : std::vector<std::size_t>{10000, 50000, 100000};
      for (std::size_t n : sizes) {
        for (JoinAlgo algo : {JoinAlgo::prefetch_nlj, JoinAlgo::tensor}) {
          Config c;
          c.variant = "end_to_end";
          c.algo = algo;
          c.left_rows = c.right_rows = n;
          c.threads = threads;
          out.push_back(c);
        }
      }
      // Per-FP32 grid: a fixed number of FP32 operations split into
      // sqrt(total / dim) tuples per relation.
      const std::vector<double> totals =
          desk ? std::vector<double>{25600, 409600, 4194304}
               : std::vector<double>{25600, 2621440, 268435456};
      for (double total : totals) {
        for (std::size_t dim : {1, 4, 16, 64, 256}) {
          const auto n = static_cast<std::size_t>(std::llround(std::sqrt(total / dim)));
          for (JoinAlgo algo : {JoinAlgo::prefetch_nlj, JoinAlgo::tensor}) {
            Config c;
            c.variant = "per_fp32_total_" + std::to_string(static_cast<std::uint64_t>(total));
            c.algo = algo;
            c.left_rows = c.right_rows = n;
            c.dim = dim;
            c.threshold = 0.9f;
            c.threads = threads;
            out.push_back(c);
          }
        }
      }
      break;
    }
  }
  return out;
}

std::string experiment_name(Experiment e) {
  return "e" + std::to_string(static_cast<int>(e) + 1);
}

}  // namespace

std::vector<BenchRow> run_experiment(Experiment experiment, Scale scale,
                                     const BenchOptions& options) {
  std::vector<BenchRow> rows;
  const auto name = experiment_name(experiment);
  for (const Config& c : configs_for(experiment, scale, std::max<std::size_t>(options.threads, 1))) {
    rows.push_back(run_config(name, c, options));
  }
  return rows;
}

std::string bench_csv_header() {
  return "experiment,variant,repetitions,wall_nanos_min,wall_nanos_max,per_fp32_ns," +
         csv_header();
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << bench_csv_header() << '\n';
  for (const BenchRow& r : rows) {
    out << r.experiment << ',' << r.variant << ',' << r.repetitions << ',' << r.wall_nanos_min
        << ',' << r.wall_nanos_max << ',' << r.per_fp32_ns << ',' << csv_row(r.record) << '\n';
  }
}

}  // namespace ejoin

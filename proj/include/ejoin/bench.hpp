#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ejoin/record.hpp"

namespace ejoin {

/// e1 naive vs prefetch, e2 thread scaling, e3 input ordering,
/// e4 budget sweep, e5 NLJ vs tensor (plus the per-FP32 grid).
enum class Experiment { e1, e2, e3, e4, e5 };
enum class Scale { desk, paper };

Experiment parse_experiment(std::string_view text);
Scale parse_scale(std::string_view text);

struct BenchOptions {
  std::size_t repetitions = 3;
  std::size_t threads = 8;
  std::uint64_t seed = 42;
  std::ostream* progress = nullptr;
};

/// One configuration, timed over several repetitions. record.stats.wall_nanos
/// holds the median.
struct BenchRow {
  std::string experiment;
  std::string variant;
  std::size_t repetitions = 0;
  std::uint64_t wall_nanos_min = 0;
  std::uint64_t wall_nanos_max = 0;
  double per_fp32_ns = 0.0;
  RunRecord record;
};

/// Generated tokens "tok_<seed>_<i>" for i in [0, rows).
std::vector<std::string> generate_tokens(std::size_t rows, std::uint64_t seed);

std::vector<BenchRow> run_experiment(Experiment experiment, Scale scale,
                                     const BenchOptions& options = {});

std::string bench_csv_header();
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ejoin

#include "ejoin/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ejoin/bench.hpp"
#include "ejoin/cost.hpp"
#include "ejoin/join.hpp"
#include "ejoin/record.hpp"

namespace ejoin::cli {
namespace {

template <typename T>
T parse_unsigned(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidArgument("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  spec.text = std::string(text);
  if (text.starts_with("vec:")) {
    spec.kind = ModelKind::lookup;
    std::string_view rest = text.substr(4);
    for (auto [suffix, policy] : {std::pair{std::string_view(":oov=error"), OovPolicy::error},
                                  std::pair{std::string_view(":oov=synthetic"), OovPolicy::synthetic}}) {
      if (rest.ends_with(suffix)) {
        rest.remove_suffix(suffix.size());
        spec.oov = policy;
        break;
      }
    }
    if (rest.empty()) throw InvalidArgument("model spec 'vec:' needs a path");
    spec.path = std::string(rest);
    return spec;
  }
  if (!text.starts_with("synthetic")) {
    throw InvalidArgument("model spec must start with 'synthetic:' or 'vec:'");
  }
  std::string_view rest = text.substr(9);
  bool have_seed = false;
  bool have_dim = false;
  while (!rest.empty()) {
    if (rest.front() != ':') throw InvalidArgument("malformed model spec '" + spec.text + "'");
    rest.remove_prefix(1);
    const auto end = std::min(rest.find(':'), rest.size());
    const std::string_view item = rest.substr(0, end);
    rest.remove_prefix(end);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("malformed model spec item '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "seed") {
      spec.seed = parse_unsigned<std::uint64_t>(value, "seed");
      have_seed = true;
    } else if (key == "dim") {
      spec.dim = parse_unsigned<std::size_t>(value, "dim");
      have_dim = true;
    } else if (key == "latency_ns") {
      spec.latency_ns = parse_unsigned<std::uint64_t>(value, "latency_ns");
    } else {
      throw InvalidArgument("unknown model spec key '" + std::string(key) + "'");
    }
  }
  if (!have_seed || !have_dim) throw InvalidArgument("synthetic model spec needs seed= and dim=");
  if (spec.dim == 0) throw InvalidArgument("dim must be positive");
  return spec;
}

EmbeddingModel build_model(const ModelSpec& spec) {
  if (spec.kind == ModelKind::synthetic) {
    return EmbeddingModel::synthetic(spec.seed, spec.dim, spec.latency_ns);
  }
  return load_vec_file(spec.path, spec.oov, spec.seed);
}

std::uint64_t parse_bytes(std::string_view text) {
  std::string_view digits = text;
  std::uint64_t scale = 1;
  for (std::string_view unit : {"iB", "B"}) {
    if (digits.size() > unit.size() && digits.ends_with(unit)) {
      digits.remove_suffix(unit.size());
      break;
    }
  }
  if (!digits.empty()) {
    switch (digits.back()) {
      case 'K': case 'k': scale = std::uint64_t{1} << 10; break;
      case 'M': case 'm': scale = std::uint64_t{1} << 20; break;
      case 'G': case 'g': scale = std::uint64_t{1} << 30; break;
      default: break;
    }
    if (scale != 1) digits.remove_suffix(1);
  }
  return parse_unsigned<std::uint64_t>(digits, "byte count") * scale;
}

namespace {

struct GenArgs {
  std::size_t rows = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct JoinArgs {
  std::string left;
  std::string right;
  std::string model;
  float threshold = 0.0f;
  std::string algo = "tensor";
  std::size_t threads = 1;
  std::string budget = "64MiB";
  std::string inner = "auto";
  bool pin = false;
  std::string out_matches = "-";
  std::string out_stats;
};

struct TopkArgs {
  std::string model;
  std::string relation;
  std::string probe;
  std::size_t k = 15;
};

struct EstimateArgs {
  std::uint64_t left_rows = 0;
  std::uint64_t right_rows = 0;
  std::size_t dim = 0;
  std::string budget;
  std::string params;
};

struct CalibrateArgs {
  std::string model;
  std::size_t samples = 1000;
  std::size_t reps = 5;
  std::size_t kappa_block = 1024;
  std::string out = "-";
};

struct BenchArgs {
  std::string experiment;
  std::string scale = "desk";
  std::string out = "-";
  std::size_t reps = 3;
  std::size_t threads = 8;
  std::uint64_t seed = 42;
};

// Writes to a file, or to `out` when path is "-".
template <typename Fn>
void with_output(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path == "-" || path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  fn(file);
  if (!file) throw IoError("write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

InnerChoice parse_inner(std::string_view text) {
  if (text == "auto") return InnerChoice::automatic;
  if (text == "left") return InnerChoice::left;
  if (text == "right") return InnerChoice::right;
  throw InvalidArgument("inner must be auto, left or right");
}

int cmd_gen(const GenArgs& a) {
  write_token_file(a.out, generate_tokens(a.rows, a.seed));
  return kOk;
}

int cmd_join(const JoinArgs& a, std::ostream& out) {
  const Threshold threshold(a.threshold);
  const JoinAlgo algo = parse_join_algo(a.algo);
  JoinOptions options;
  options.threads = a.threads;
  if (options.threads == 0) throw InvalidArgument("threads must be at least 1");
  options.budget_bytes = parse_bytes(a.budget);
  options.inner = parse_inner(a.inner);
  options.pin_threads = a.pin;
  const ModelSpec spec = parse_model_spec(a.model);

  const RawRelation left("R", read_token_file(a.left));
  const RawRelation right("S", read_token_file(a.right));
  const EmbeddingModel model = build_model(spec);

  const JoinResult result = run_join(algo, left, right, model, threshold, options);
  with_output(a.out_matches, out, [&](std::ostream& os) { write_matches_csv(os, result.matches); });
  if (!a.out_stats.empty()) {
    const RunRecord record = make_run_record(
        result.stats, left.size(), right.size(), model.dim(), threshold.value(),
        algo == JoinAlgo::tensor ? options.budget_bytes : 0, spec.text, spec.seed);
    with_output(a.out_stats, out, [&](std::ostream& os) { os << to_json(record) << '\n'; });
  }
  return kOk;
}

int cmd_topk(const TopkArgs& a, std::ostream& out) {
  if (a.k == 0) throw InvalidArgument("k must be positive");
  const ModelSpec spec = parse_model_spec(a.model);
  const RawRelation raw("R", read_token_file(a.relation));
  const EmbeddingModel model = build_model(spec);
  const EmbeddedRelation er = embed_relation(model, raw);
  for (const auto& hit : top_k(model, er, raw, a.probe, a.k)) {
    char sim[32];
    std::snprintf(sim, sizeof(sim), "%.6f", static_cast<double>(hit.similarity));
    out << hit.token << '\t' << sim << '\n';
  }
  return kOk;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const CostParams params = cost_params_from_json(read_file(a.params));
  const PlanChoice choice =
      choose_plan(a.left_rows, a.right_rows, a.dim, parse_bytes(a.budget), params);
  out << to_json(choice) << '\n';
  return kOk;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const ModelSpec spec = parse_model_spec(a.model);
  const EmbeddingModel model = build_model(spec);
  CalibrationOptions options;
  options.sample_size = a.samples;
  options.repetitions = a.reps;
  options.kappa_block = a.kappa_block;
  const CostParams params = calibrate(model, model.dim(), options);
  with_output(a.out, out, [&](std::ostream& os) { os << to_json(params) << '\n'; });
  return kOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.reps < 3) throw InvalidArgument("bench needs at least 3 repetitions");
  BenchOptions options;
  options.repetitions = a.reps;
  options.threads = a.threads;
  options.seed = a.seed;
  options.progress = &err;
  const auto rows = run_experiment(parse_experiment(a.experiment), parse_scale(a.scale), options);
  with_output(a.out, out, [&](std::ostream& os) { write_bench_csv(os, rows); });
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-enhanced similarity joins over embedded relations", "ejoin"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a deterministic synthetic token file");
  gen_cmd->add_option("--rows", gen.rows, "Number of tokens")->required();
  gen_cmd->add_option("--seed", gen.seed, "Token seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output path")->required();

  JoinArgs join;
  auto* join_cmd = app.add_subcommand("join", "Join two token files on cosine similarity");
  join_cmd->add_option("--left", join.left, "Left token file")->required();
  join_cmd->add_option("--right", join.right, "Right token file")->required();
  join_cmd->add_option("--model", join.model, "Model spec")->required();
  join_cmd->add_option("--threshold", join.threshold, "Cosine threshold in [-1, 1]")->required();
  join_cmd->add_option("--algo", join.algo, "naive | prefetch | tensor");
  join_cmd->add_option("--threads", join.threads, "Worker threads");
  join_cmd->add_option("--budget", join.budget, "Per-worker buffer budget (bytes, K/M/G suffix)");
  join_cmd->add_option("--inner", join.inner, "Inner relation: auto | left | right");
  join_cmd->add_flag("--pin", join.pin, "Pin worker threads to cores (best effort)");
  join_cmd->add_option("--out-matches", join.out_matches, "Matches CSV path, '-' for stdout");
  join_cmd->add_option("--out-stats", join.out_stats, "Run record JSON path");

  TopkArgs topk;
  auto* topk_cmd = app.add_subcommand("topk", "Most similar tokens of a relation to a probe");
  topk_cmd->add_option("--model", topk.model, "Model spec")->required();
  topk_cmd->add_option("--relation", topk.relation, "Token file")->required();
  topk_cmd->add_option("--probe", topk.probe, "Probe token")->required();
  topk_cmd->add_option("--k", topk.k, "Number of results");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Cost estimates and the chosen plan");
  est_cmd->add_option("--left-rows", est.left_rows, "|R|")->required();
  est_cmd->add_option("--right-rows", est.right_rows, "|S|")->required();
  est_cmd->add_option("--dim", est.dim, "Embedding dim")->required();
  est_cmd->add_option("--budget", est.budget, "Buffer budget")->required();
  est_cmd->add_option("--params", est.params, "CostParams JSON file")->required();

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Measure cost parameters on this machine");
  cal_cmd->add_option("--model", cal.model, "Model spec")->required();
  cal_cmd->add_option("--samples", cal.samples, "Sample size (>= 100)");
  cal_cmd->add_option("--reps", cal.reps, "Repetitions per measurement");
  cal_cmd->add_option("--kappa-block", cal.kappa_block, "Block side for the tensor timing");
  cal_cmd->add_option("--out", cal.out, "Output path, '-' for stdout");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run one experiment of the benchmark suite");
  bench_cmd->add_option("--experiment", bench.experiment, "e1 | e2 | e3 | e4 | e5")->required();
  bench_cmd->add_option("--scale", bench.scale, "desk | paper");
  bench_cmd->add_option("--out", bench.out, "CSV path, '-' for stdout");
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per configuration (>= 3)");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads");
  bench_cmd->add_option("--seed", bench.seed, "Data and model seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*join_cmd) return cmd_join(join, out);
    if (*topk_cmd) return cmd_topk(topk, out);
    if (*est_cmd) return cmd_estimate(est, out);
    if (*cal_cmd) return cmd_calibrate(cal, out);
    if (*bench_cmd) return cmd_bench(bench, out, err);
  } catch (const OutOfVocabulary& e) {
    err << "error: " << e.what() << '\n';
    return kOov;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace ejoin::cli

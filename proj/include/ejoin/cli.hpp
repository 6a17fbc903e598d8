#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "ejoin/embedding.hpp"

namespace ejoin::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kOov = 3 };

/// "synthetic:seed=<u64>:dim=<n>[:latency_ns=<n>]" or
/// "vec:<path>[:oov=error|synthetic]".
struct ModelSpec {
  ModelKind kind = ModelKind::synthetic;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::uint64_t latency_ns = 0;
  std::filesystem::path path;
  OovPolicy oov = OovPolicy::error;
  std::string text;
};

/// Throws InvalidArgument.
ModelSpec parse_model_spec(std::string_view text);
EmbeddingModel build_model(const ModelSpec& spec);

/// Accepts a plain byte count or one with a K/M/G suffix (binary multiples,
/// optional trailing "B" or "iB").
std::uint64_t parse_bytes(std::string_view text);

/// Entry point behind the ejoin binary. Errors print one "error: ..." line to
/// err and map to the ExitCode values.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ejoin::cli

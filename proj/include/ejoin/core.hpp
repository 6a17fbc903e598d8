#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ejoin {

/// Tuple offset inside a relation. 64-bit so |R| x |S| products never wrap.
using Offset = std::uint64_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class OffsetOutOfRange : public Error {
 public:
  OffsetOutOfRange(Offset offset, std::size_t cardinality);
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t lhs, std::size_t rhs);
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("zero-norm vector in cosine similarity") {}
};

class BufferTooSmall : public Error {
 public:
  BufferTooSmall(std::size_t needed, std::size_t capacity);
};

class BudgetTooSmall : public Error {
 public:
  explicit BudgetTooSmall(std::uint64_t budget_bytes);
};

class OutOfVocabulary : public Error {
 public:
  explicit OutOfVocabulary(std::string token);
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

/// Ordered collection of context-rich tokens. Offsets are dense and 0-based,
/// and the relation doubles as the lookup table used for decoding.
class RawRelation {
 public:
  RawRelation() = default;
  RawRelation(std::string name, std::vector<std::string> tokens)
      : name_(std::move(name)), tokens_(std::move(tokens)) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  /// Throws OffsetOutOfRange.
  const std::string& at(Offset offset) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::string name_;
  std::vector<std::string> tokens_;
};

RawRelation make_raw_relation(std::string name, std::vector<std::string> tokens);

/// Dense row-major |R| x dim fp32 matrix, one row per tuple.
class EmbeddedRelation {
 public:
  EmbeddedRelation() = default;
  /// Throws InvalidArgument if dim == 0 or data.size() is not a multiple of dim.
  EmbeddedRelation(std::vector<float> data, std::size_t dim, bool normalized,
                   std::string source_name);

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  const std::string& source_name() const noexcept { return source_name_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

 private:
  std::vector<float> data_;
  std::size_t dim_ = 0;
  bool normalized_ = false;
  std::string source_name_;
};

// ---------------------------------------------------------------------------
// Predicates and results
// ---------------------------------------------------------------------------

/// Cosine threshold in [-1, 1]. A pair matches iff similarity >= value.
class Threshold {
 public:
  /// Throws InvalidArgument("threshold out of range") outside [-1, 1] or NaN.
  explicit Threshold(float value);
  float value() const noexcept { return value_; }
  bool admits(float similarity) const noexcept { return similarity >= value_; }

 private:
  float value_;
};

struct Match {
  Offset left = 0;
  Offset right = 0;
  float similarity = 0.0f;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchSet {
  std::vector<Match> matches;
  std::string left_name;
  std::string right_name;

  std::size_t size() const noexcept { return matches.size(); }
  bool empty() const noexcept { return matches.empty(); }
};

/// Sorts by (left, right) and drops duplicate pairs, keeping the first seen.
MatchSet canonicalize(MatchSet m);

/// True when both sets hold the same pairs with bitwise-identical similarities.
bool identical(const MatchSet& a, const MatchSet& b);

}  // namespace ejoin

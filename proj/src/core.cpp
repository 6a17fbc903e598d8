#include "ejoin/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ejoin {

OffsetOutOfRange::OffsetOutOfRange(Offset offset, std::size_t cardinality)
    : Error("offset " + std::to_string(offset) + " out of range for relation of " +
            std::to_string(cardinality) + " tuples") {}

DimensionMismatch::DimensionMismatch(std::size_t lhs, std::size_t rhs)
    : Error("dimension mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}

BufferTooSmall::BufferTooSmall(std::size_t needed, std::size_t capacity)
    : Error("buffer too small: need " + std::to_string(needed) + " elements, have " +
            std::to_string(capacity)) {}

BudgetTooSmall::BudgetTooSmall(std::uint64_t budget_bytes)
    : Error("budget too small: " + std::to_string(budget_bytes) +
            " bytes cannot hold one fp32 cell") {}

OutOfVocabulary::OutOfVocabulary(std::string token)
    : Error("out of vocabulary token '" + token + "'"), token_(std::move(token)) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}

const std::string& RawRelation::at(Offset offset) const {
  if (offset >= tokens_.size()) throw OffsetOutOfRange(offset, tokens_.size());
  return tokens_[offset];
}

RawRelation make_raw_relation(std::string name, std::vector<std::string> tokens) {
  return RawRelation(std::move(name), std::move(tokens));
}

EmbeddedRelation::EmbeddedRelation(std::vector<float> data, std::size_t dim, bool normalized,
                                   std::string source_name)
    : data_(std::move(data)),
      dim_(dim),
      normalized_(normalized),
      source_name_(std::move(source_name)) {
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
  if (data_.size() % dim_ != 0)
    throw InvalidArgument("embedding data length " + std::to_string(data_.size()) +
                          " is not a multiple of dim " + std::to_string(dim_));
}

Threshold::Threshold(float value) : value_(value) {
  if (!(value >= -1.0f && value <= 1.0f)) throw InvalidArgument("threshold out of range");
}

MatchSet canonicalize(MatchSet m) {
  auto key_less = [](const Match& a, const Match& b) {
    return a.left != b.left ? a.left < b.left : a.right < b.right;
  };
  std::stable_sort(m.matches.begin(), m.matches.end(), key_less);
  auto last = std::unique(m.matches.begin(), m.matches.end(), [](const Match& a, const Match& b) {
    return a.left == b.left && a.right == b.right;
  });
  m.matches.erase(last, m.matches.end());
  return m;
}

bool identical(const MatchSet& a, const MatchSet& b) {
  return std::equal(a.matches.begin(), a.matches.end(), b.matches.begin(), b.matches.end(),
                    [](const Match& x, const Match& y) {
                      return x.left == y.left && x.right == y.right &&
                             std::bit_cast<std::uint32_t>(x.similarity) ==
                                 std::bit_cast<std::uint32_t>(y.similarity);
                    });
}

}  // namespace ejoin

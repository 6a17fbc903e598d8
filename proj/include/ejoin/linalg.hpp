#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ejoin/core.hpp"

namespace ejoin {

/// Rectangular block of the |R| x |S| similarity matrix. Partitioning happens
/// along tuple boundaries only; every tile spans the full embedding dim.
struct Tile {
  Offset left_row_start = 0;
  std::size_t left_row_count = 0;
  Offset right_row_start = 0;
  std::size_t right_row_count = 0;

  std::size_t area() const noexcept { return left_row_count * right_row_count; }
  friend bool operator==(const Tile&, const Tile&) = default;
};

/// Sequential fp32 accumulation. Throws DimensionMismatch.
float dot(std::span<const float> a, std::span<const float> b);

/// dot(a, b) / (|a| |b|). Throws DimensionMismatch or ZeroVector.
float cosine_vv(std::span<const float> a, std::span<const float> b);

/// L2-normalizes v in fp32. A vector whose norm is below 1e-12 gets
/// component 0 set to 1 before normalizing. Returns true if it was repaired.
bool normalize_in_place(std::span<float> v);

struct NormalizedRelation {
  EmbeddedRelation relation;
  std::size_t repaired_rows = 0;
};

/// Requires er.normalized() == false (InvalidArgument otherwise).
NormalizedRelation normalize_rows(const EmbeddedRelation& er);

/// Element i = cosine_vv(a, row i of m).
std::vector<float> cosine_vm(std::span<const float> a, const EmbeddedRelation& m);

/// Dense dot products for one tile of two normalized relations:
/// out[i * tile.right_row_count + j] = left[start_l + i] . right[start_r + j].
///
/// Right rows are packed into column strips and multiplied against register
/// blocks of left rows, so the inner loop runs over contiguous floats and maps
/// onto the host's vector unit (AVX-512 / AVX2 when compiled for them).
void tile_similarity(const EmbeddedRelation& left, const EmbeddedRelation& right,
                     const Tile& tile, std::span<float> out);

/// Instruction set the tile kernel was compiled for: "avx512", "avx2" or "generic".
std::string_view kernel_isa() noexcept;

/// Appends every cell >= threshold of a tile buffer as a match at global offsets.
void threshold_scan(std::span<const float> out, const Tile& tile, Threshold threshold,
                    std::vector<Match>& sink);

}  // namespace ejoin

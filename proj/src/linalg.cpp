#include "ejoin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace ejoin {

float dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

float cosine_vv(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  float ab = 0.0f;
  float aa = 0.0f;
  float bb = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0f || bb == 0.0f) throw ZeroVector();
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

bool normalize_in_place(std::span<float> v) {
  if (v.empty()) return false;
  float sq = 0.0f;
  for (float x : v) sq += x * x;
  float norm = std::sqrt(sq);
  bool repaired = false;
  if (!(norm >= 1e-12f)) {
    v[0] = 1.0f;
    sq = 0.0f;
    for (float x : v) sq += x * x;
    norm = std::sqrt(sq);
    repaired = true;
  }
  for (float& x : v) x /= norm;
  return repaired;
}

NormalizedRelation normalize_rows(const EmbeddedRelation& er) {
  if (er.normalized()) throw InvalidArgument("relation '" + er.source_name() +
                                             "' is already normalized");
  std::vector<float> data(er.data().begin(), er.data().end());
  const std::size_t dim = er.dim();
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < er.rows(); ++i) {
    if (normalize_in_place(std::span<float>(data.data() + i * dim, dim))) ++repaired;
  }
  return {EmbeddedRelation(std::move(data), dim, true, er.source_name()), repaired};
}

std::vector<float> cosine_vm(std::span<const float> a, const EmbeddedRelation& m) {
  if (a.size() != m.dim()) throw DimensionMismatch(a.size(), m.dim());
  std::vector<float> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = cosine_vv(a, m.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Blocked tile kernel
// ---------------------------------------------------------------------------

namespace {

constexpr int kMr = 6;
#if defined(__AVX512F__)
constexpr int kNr = 32;
#elif defined(__AVX2__)
constexpr int kNr = 16;
#else
constexpr int kNr = 16;
#endif

// packed[k * kNr + j] = right row (first + j), component k; zero past nr.
void pack_strip(const EmbeddedRelation& right, std::size_t first, std::size_t nr,
                float* packed) {
  const std::size_t dim = right.dim();
  if (nr < static_cast<std::size_t>(kNr)) std::memset(packed, 0, sizeof(float) * kNr * dim);
  for (std::size_t j = 0; j < nr; ++j) {
    const float* src = right.row(first + j).data();
    for (std::size_t k = 0; k < dim; ++k) packed[k * kNr + j] = src[k];
  }
}

#if defined(__AVX512F__)

template <int MR>
void block_kernel(const float* a, std::size_t dim, const float* packed, float* c,
                  std::size_t ldc, std::size_t nr) {
  __m512 acc0[MR];
  __m512 acc1[MR];
  for (int r = 0; r < MR; ++r) {
    acc0[r] = _mm512_setzero_ps();
    acc1[r] = _mm512_setzero_ps();
  }
  for (std::size_t k = 0; k < dim; ++k) {
    const __m512 b0 = _mm512_loadu_ps(packed + k * kNr);
    const __m512 b1 = _mm512_loadu_ps(packed + k * kNr + 16);
    for (int r = 0; r < MR; ++r) {
      const __m512 av = _mm512_set1_ps(a[r * dim + k]);
      acc0[r] = _mm512_fmadd_ps(av, b0, acc0[r]);
      acc1[r] = _mm512_fmadd_ps(av, b1, acc1[r]);
    }
  }
  const __mmask16 m0 =
      nr >= 16 ? __mmask16(0xFFFF) : static_cast<__mmask16>((1u << nr) - 1u);
  const __mmask16 m1 =
      nr >= 32 ? __mmask16(0xFFFF)
               : (nr > 16 ? static_cast<__mmask16>((1u << (nr - 16)) - 1u) : __mmask16(0));
  for (int r = 0; r < MR; ++r) {
    _mm512_mask_storeu_ps(c + r * ldc, m0, acc0[r]);
    _mm512_mask_storeu_ps(c + r * ldc + 16, m1, acc1[r]);
  }
}

#elif defined(__AVX2__)

template <int MR>
void block_kernel(const float* a, std::size_t dim, const float* packed, float* c,
                  std::size_t ldc, std::size_t nr) {
  __m256 acc0[MR];
  __m256 acc1[MR];
  for (int r = 0; r < MR; ++r) {
    acc0[r] = _mm256_setzero_ps();
    acc1[r] = _mm256_setzero_ps();
  }
  for (std::size_t k = 0; k < dim; ++k) {
    const __m256 b0 = _mm256_loadu_ps(packed + k * kNr);
    const __m256 b1 = _mm256_loadu_ps(packed + k * kNr + 8);
    for (int r = 0; r < MR; ++r) {
      const __m256 av = _mm256_broadcast_ss(a + r * dim + k);
      acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
    }
  }
  if (nr == static_cast<std::size_t>(kNr)) {
    for (int r = 0; r < MR; ++r) {
      _mm256_storeu_ps(c + r * ldc, acc0[r]);
      _mm256_storeu_ps(c + r * ldc + 8, acc1[r]);
    }
    return;
  }
  alignas(32) float tmp[kNr];
  for (int r = 0; r < MR; ++r) {
    _mm256_store_ps(tmp, acc0[r]);
    _mm256_store_ps(tmp + 8, acc1[r]);
    std::memcpy(c + r * ldc, tmp, sizeof(float) * nr);
  }
}

#else

template <int MR>
void block_kernel(const float* a, std::size_t dim, const float* packed, float* c,
                  std::size_t ldc, std::size_t nr) {
  float acc[MR][kNr] = {};
  for (std::size_t k = 0; k < dim; ++k) {
    const float* b = packed + k * kNr;
    for (int r = 0; r < MR; ++r) {
      const float av = a[r * dim + k];
      for (int j = 0; j < kNr; ++j) acc[r][j] += av * b[j];
    }
  }
  for (int r = 0; r < MR; ++r) std::memcpy(c + r * ldc, acc[r], sizeof(float) * nr);
}

#endif

void block_dispatch(std::size_t mr, const float* a, std::size_t dim, const float* packed,
                    float* c, std::size_t ldc, std::size_t nr) {
  switch (mr) {
    case 1: block_kernel<1>(a, dim, packed, c, ldc, nr); break;
    case 2: block_kernel<2>(a, dim, packed, c, ldc, nr); break;
    case 3: block_kernel<3>(a, dim, packed, c, ldc, nr); break;
    case 4: block_kernel<4>(a, dim, packed, c, ldc, nr); break;
    case 5: block_kernel<5>(a, dim, packed, c, ldc, nr); break;
    default: block_kernel<kMr>(a, dim, packed, c, ldc, nr); break;
  }
}

}  // namespace

void tile_similarity(const EmbeddedRelation& left, const EmbeddedRelation& right,
                     const Tile& tile, std::span<float> out) {
  if (left.dim() != right.dim()) throw DimensionMismatch(left.dim(), right.dim());
  if (!left.normalized() || !right.normalized())
    throw InvalidArgument("tile_similarity requires normalized relations");
  if (tile.left_row_count == 0 || tile.right_row_count == 0)
    throw InvalidArgument("tile must cover at least one cell");
  if (tile.left_row_start + tile.left_row_count > left.rows() ||
      tile.right_row_start + tile.right_row_count > right.rows())
    throw InvalidArgument("tile exceeds relation bounds");
  if (out.size() < tile.area()) throw BufferTooSmall(tile.area(), out.size());

  const std::size_t dim = left.dim();
  const std::size_t ldc = tile.right_row_count;
  thread_local std::vector<float> packed;
  packed.resize(static_cast<std::size_t>(kNr) * dim);

  const float* left_base = left.row(tile.left_row_start).data();
  for (std::size_t j0 = 0; j0 < tile.right_row_count; j0 += kNr) {
    const std::size_t nr = std::min<std::size_t>(kNr, tile.right_row_count - j0);
    pack_strip(right, tile.right_row_start + j0, nr, packed.data());
    for (std::size_t i0 = 0; i0 < tile.left_row_count; i0 += kMr) {
      const std::size_t mr = std::min<std::size_t>(kMr, tile.left_row_count - i0);
      block_dispatch(mr, left_base + i0 * dim, dim, packed.data(), out.data() + i0 * ldc + j0,
                     ldc, nr);
    }
  }
}

std::string_view kernel_isa() noexcept {
#if defined(__AVX512F__)
  return "avx512";
#elif defined(__AVX2__)
  return "avx2";
#else
  return "generic";
#endif
}

void threshold_scan(std::span<const float> out, const Tile& tile, Threshold threshold,
                    std::vector<Match>& sink) {
  if (out.size() < tile.area()) throw BufferTooSmall(tile.area(), out.size());
  const float theta = threshold.value();
  for (std::size_t i = 0; i < tile.left_row_count; ++i) {
    const float* row = out.data() + i * tile.right_row_count;
    for (std::size_t j = 0; j < tile.right_row_count; ++j) {
      if (row[j] >= theta) {
        sink.push_back({tile.left_row_start + i, tile.right_row_start + j, row[j]});
      }
    }
  }
}

}  // namespace ejoin

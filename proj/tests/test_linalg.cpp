#include <doctest.h>

#include <cmath>
#include <random>

#include "ejoin/linalg.hpp"

using namespace ejoin;

namespace {

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n;
  std::vector<float> v(dim);
  for (float& x : v) x = n(rng);
  return v;
}

EmbeddedRelation random_normalized(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
  std::vector<float> data;
  for (std::size_t i = 0; i < rows; ++i) {
    auto v = random_vector(rng, dim);
    data.insert(data.end(), v.begin(), v.end());
  }
  return normalize_rows(EmbeddedRelation(std::move(data), dim, false, "rand")).relation;
}

// Straightforward double-precision reference for one cell.
double ref_dot(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_CASE("dot examples") {
  CHECK(dot(std::vector<float>{1, 0}, std::vector<float>{0, 1}) == 0.0f);
  CHECK(dot(std::vector<float>{1, 2, 3}, std::vector<float>{1, 2, 3}) == 14.0f);
  CHECK(dot(std::vector<float>{}, std::vector<float>{}) == 0.0f);
  CHECK_THROWS_AS(dot(std::vector<float>{1}, std::vector<float>{1, 2}), DimensionMismatch);
}

TEST_CASE("cosine_vv examples") {
  const std::vector<float> v{0.3f, -2.0f, 5.5f};
  CHECK(cosine_vv(v, v) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cosine_vv(std::vector<float>{1, 0}, std::vector<float>{1, 1}) ==
        doctest::Approx(0.70710678).epsilon(1e-6));
  CHECK(cosine_vv(std::vector<float>{1, 0}, std::vector<float>{-1, 0}) ==
        doctest::Approx(-1.0).epsilon(1e-6));
  CHECK_THROWS_AS(cosine_vv(std::vector<float>{0, 0}, std::vector<float>{1, 0}), ZeroVector);
  CHECK_THROWS_AS(cosine_vv(std::vector<float>{1}, std::vector<float>{1, 0}), DimensionMismatch);
}

TEST_CASE("cosine properties on random pairs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t dim = 1 + trial % 130;
    const auto a = random_vector(rng, dim);
    const auto b = random_vector(rng, dim);
    const float c = cosine_vv(a, b);
    CHECK(c == cosine_vv(b, a));  // bitwise symmetric
    CHECK(c >= -1.0f - 1e-5f);
    CHECK(c <= 1.0f + 1e-5f);

    auto na = a, nb = b;
    normalize_in_place(na);
    normalize_in_place(nb);
    CHECK(std::abs(c - dot(na, nb)) <= 1e-5f);

    for (float scale : {0.5f, 2.0f, 1000.0f}) {
      auto sa = a;
      for (float& x : sa) x *= scale;
      CHECK(std::abs(cosine_vv(sa, b) - c) <= 1e-5f);
    }
  }
}

TEST_CASE("normalize_rows examples") {
  const EmbeddedRelation er({3, 4, 0.6f, 0.8f, 0, 0}, 2, false, "n");
  const auto n = normalize_rows(er);
  CHECK(n.relation.normalized());
  CHECK(n.repaired_rows == 1);
  CHECK(n.relation.row(0)[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(n.relation.row(0)[1] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(std::abs(n.relation.row(1)[0] - 0.6f) <= 1e-6f);
  CHECK(std::abs(n.relation.row(1)[1] - 0.8f) <= 1e-6f);
  CHECK(n.relation.row(2)[0] == 1.0f);
  CHECK(n.relation.row(2)[1] == 0.0f);
  CHECK_THROWS_AS(normalize_rows(n.relation), InvalidArgument);
}

TEST_CASE("normalized rows have unit norm") {
  std::mt19937_64 rng(3);
  const auto m = random_normalized(rng, 50, 37);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    CHECK(std::abs(ref_dot(m.row(i), m.row(i)) - 1.0) <= 1e-5);
  }
}

TEST_CASE("cosine_vm") {
  std::mt19937_64 rng(8);
  std::vector<float> data;
  for (int i = 0; i < 3; ++i) {
    auto v = random_vector(rng, 4);
    data.insert(data.end(), v.begin(), v.end());
  }
  const EmbeddedRelation m(data, 4, false, "m");
  const auto a = random_vector(rng, 4);
  const auto out = cosine_vm(a, m);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out[i] - cosine_vv(a, m.row(i))) <= 1e-5f);

  const std::vector<float> row0(m.row(0).begin(), m.row(0).end());
  CHECK(cosine_vm(row0, m)[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(cosine_vm(a, EmbeddedRelation({}, 4, false, "e")).empty());
  CHECK_THROWS_AS(cosine_vm(std::vector<float>{1, 2}, m), DimensionMismatch);
  CHECK_THROWS_AS(cosine_vm(std::vector<float>{0, 0, 0, 0}, m), ZeroVector);
}

TEST_CASE("tile_similarity on identity rows") {
  const auto e = normalize_rows(EmbeddedRelation({1, 0, 0, 1}, 2, false, "e")).relation;
  std::vector<float> out(4);
  tile_similarity(e, e, Tile{0, 2, 0, 2}, out);
  CHECK(out == std::vector<float>{1, 0, 0, 1});

  std::vector<float> one(1);
  tile_similarity(e, e, Tile{1, 1, 0, 1}, one);
  CHECK(one[0] == 0.0f);
}

TEST_CASE("tile_similarity errors") {
  const auto a = normalize_rows(EmbeddedRelation({1, 0, 0, 1}, 2, false, "a")).relation;
  const auto b = normalize_rows(EmbeddedRelation({1, 0, 0}, 3, false, "b")).relation;
  std::vector<float> out(4);
  CHECK_THROWS_AS(tile_similarity(a, b, Tile{0, 1, 0, 1}, out), DimensionMismatch);
  std::vector<float> small(3);
  CHECK_THROWS_AS(tile_similarity(a, a, Tile{0, 2, 0, 2}, small), BufferTooSmall);
  CHECK_THROWS_AS(tile_similarity(a, a, Tile{1, 2, 0, 1}, out), InvalidArgument);
  const EmbeddedRelation raw({1, 0}, 2, false, "raw");
  CHECK_THROWS_AS(tile_similarity(raw, a, Tile{0, 1, 0, 1}, out), InvalidArgument);
}

TEST_CASE("block-wise assembly equals the full pairwise matrix") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t rows_l = 1 + rng() % 64;
    const std::size_t rows_r = 1 + rng() % 64;
    const std::size_t dim = 1 + rng() % 16;
    const auto left = random_normalized(rng, rows_l, dim);
    const auto right = random_normalized(rng, rows_r, dim);
    const std::size_t bl = 1 + rng() % rows_l;
    const std::size_t br = 1 + rng() % rows_r;

    std::vector<float> full(rows_l * rows_r, std::nanf(""));
    std::vector<float> buffer(bl * br);
    for (std::size_t l = 0; l < rows_l; l += bl) {
      for (std::size_t r = 0; r < rows_r; r += br) {
        const Tile t{l, std::min(bl, rows_l - l), r, std::min(br, rows_r - r)};
        tile_similarity(left, right, t, buffer);
        for (std::size_t i = 0; i < t.left_row_count; ++i)
          for (std::size_t j = 0; j < t.right_row_count; ++j)
            full[(l + i) * rows_r + r + j] = buffer[i * t.right_row_count + j];
      }
    }
    for (std::size_t i = 0; i < rows_l; ++i)
      for (std::size_t j = 0; j < rows_r; ++j)
        CHECK(std::abs(full[i * rows_r + j] - ref_dot(left.row(i), right.row(j))) <= 1e-5);
  }
}

TEST_CASE("tile kernel handles large dims and ragged edges") {
  std::mt19937_64 rng(5);
  const auto left = random_normalized(rng, 37, 1024);
  const auto right = random_normalized(rng, 71, 1024);
  std::vector<float> out(37 * 71);
  tile_similarity(left, right, Tile{0, 37, 0, 71}, out);
  for (std::size_t i = 0; i < 37; ++i)
    for (std::size_t j = 0; j < 71; ++j)
      CHECK(std::abs(out[i * 71 + j] - cosine_vv(left.row(i), right.row(j))) <= 1e-5f);
}

TEST_CASE("threshold_scan") {
  const std::vector<float> buf{0.1f, 0.9f, 0.5f, -0.2f};
  std::vector<Match> sink;
  threshold_scan(buf, Tile{0, 2, 0, 2}, Threshold(0.95f), sink);
  CHECK(sink.empty());

  threshold_scan(buf, Tile{0, 2, 0, 2}, Threshold(-1.0f), sink);
  CHECK(sink.size() == 4);

  sink.clear();
  threshold_scan(buf, Tile{500, 2, 7, 2}, Threshold(0.5f), sink);
  REQUIRE(sink.size() == 2);
  CHECK(sink[0] == Match{500, 8, 0.9f});
  CHECK(sink[1] == Match{501, 7, 0.5f});

  sink.clear();
  threshold_scan(std::vector<float>{0.7f}, Tile{500, 1, 3, 1}, Threshold(0.0f), sink);
  CHECK(sink[0].left == 500);
  CHECK(sink[0].right == 3);

  CHECK_THROWS_AS(threshold_scan(buf, Tile{0, 3, 0, 2}, Threshold(0.0f), sink), BufferTooSmall);
}

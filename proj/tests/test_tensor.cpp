#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "uap/errors.hpp"
#include "uap/tensor.hpp"

using namespace uap;

TEST_CASE("flat_index walks channel-fastest row-major order") {
  TensorShape s{2, 3, 2};
  std::size_t expect = 0;
  for (int i = 0; i < s.height; ++i)
    for (int j = 0; j < s.width; ++j)
      for (int c = 0; c < s.channels; ++c) CHECK(flat_index(s, i, j, c) == expect++);
  CHECK(expect == s.size());
}

TEST_CASE("tile_expand replicates a 3x3 tile onto 5x5 modularly") {
  PerturbationTile tile = make_tile(3, 1, 1.0);
  // Value encodes its own tile coordinates so the expansion is fully checked.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tile.values[static_cast<std::size_t>(i) * 3 + j] = 10 * i + j;

  const UniversalPerturbation out = tile_expand(tile, 5, 5);
  REQUIRE(out.shape.height == 5);
  REQUIRE(out.shape.width == 5);
  REQUIRE(out.shape.channels == 1);
  REQUIRE(out.values.size() == 25);
  // Independent oracle: recompute every entry from the modular definition.
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(out.values[flat_index(out.shape, i, j, 0)] ==
            static_cast<double>(10 * (i % 3) + (j % 3)));
}

TEST_CASE("tile_expand on 7x7 -> 28x28 repeats each tile entry exactly 16 times") {
  PerturbationTile tile = make_tile(7, 1, 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& v : tile.values) v = u(rng);

  const UniversalPerturbation out = tile_expand(tile, 28, 28);
  std::vector<int> hits(tile.values.size(), 0);
  for (int i = 0; i < 28; ++i)
    for (int j = 0; j < 28; ++j) {
      const std::size_t t = static_cast<std::size_t>(i % 7) * 7 + (j % 7);
      CHECK(out.values[flat_index(out.shape, i, j, 0)] == tile.values[t]);
      ++hits[t];
    }
  for (int h : hits) CHECK(h == 16);  // (28/7)^2 copies of each tile pixel
}

TEST_CASE("tile_expand truncates partial tiles at ragged edges") {
  PerturbationTile tile = make_tile(3, 2, 1.0);
  for (std::size_t k = 0; k < tile.values.size(); ++k) tile.values[k] = static_cast<double>(k);
  const UniversalPerturbation out = tile_expand(tile, 4, 7);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 7; ++j)
      for (int c = 0; c < 2; ++c) {
        const std::size_t t = (static_cast<std::size_t>(i % 3) * 3 + (j % 3)) * 2 + c;
        CHECK(out.values[flat_index(out.shape, i, j, c)] == tile.values[t]);
      }
}

TEST_CASE("tile_expand rejects tiles larger than the image") {
  PerturbationTile tile = make_tile(8, 1, 1.0);
  CHECK_THROWS_AS(tile_expand(tile, 7, 28), ShapeError);
  CHECK_THROWS_AS(tile_expand(tile, 28, 7), ShapeError);
  CHECK_NOTHROW(tile_expand(tile, 8, 8));
}

TEST_CASE("linf projection clamps coordinates and is idempotent and total") {
  std::vector<double> v{-2.0, -0.3, 0.0, 0.1, 0.9, 5.0};
  const std::vector<double> once = project_linf(v, 0.3);
  const std::vector<double> expect{-0.3, -0.3, 0.0, 0.1, 0.3, 0.3};
  CHECK(once == expect);
  CHECK(project_linf(once, 0.3) == once);  // idempotent
  CHECK(linf_norm(once) <= 0.3);
  // Interior points are untouched.
  std::vector<double> interior{0.05, -0.2, 0.29};
  CHECK(project_linf(interior, 0.3) == interior);
}

TEST_CASE("linf projection is the nearest point of the box (random property)") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(8), alt(8);
    for (auto& e : x) e = u(rng);
    const std::vector<double> p = project_linf(x, 0.4);
    CHECK(linf_norm(p) <= 0.4 + 1e-15);
    // Any other feasible point is at least as far in every coordinate, hence
    // in l2: coordinate-wise clamping minimizes each |x_i - y_i| separately.
    for (auto& e : alt) e = std::clamp(u(rng), -0.4, 0.4);
    double dist_p = 0, dist_alt = 0;
    for (int k = 0; k < 8; ++k) {
      dist_p += (x[k] - p[k]) * (x[k] - p[k]);
      dist_alt += (x[k] - alt[k]) * (x[k] - alt[k]);
    }
    CHECK(dist_p <= dist_alt + 1e-12);
  }
}

TEST_CASE("clip_image clamps to the pixel range and is idempotent") {
  std::vector<double> v{-0.7, 0.0, 0.25, 1.0, 1.8};
  const std::vector<double> once = clip_image(v);
  CHECK(once == std::vector<double>{0.0, 0.0, 0.25, 1.0, 1.0});
  CHECK(clip_image(once) == once);
}

TEST_CASE("perturbed_query equals clip(x + delta) coordinate-wise") {
  TensorShape shape{2, 2, 1};
  std::vector<float> pixels{0.0f, 0.5f, 0.9f, 1.0f};
  UniversalPerturbation delta;
  delta.shape = shape;
  delta.epsilon = 0.3;
  delta.values = {-0.3, 0.3, 0.3, 0.3};
  const std::vector<double> got = perturbed_query(pixels, shape, delta);
  REQUIRE(got.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const double expect = std::clamp(static_cast<double>(pixels[k]) + delta.values[k], 0.0, 1.0);
    CHECK(got[k] == expect);
  }
  // Output never leaves [0,1] and never strays more than epsilon from x.
  for (int k = 0; k < 4; ++k) {
    CHECK(got[k] >= 0.0);
    CHECK(got[k] <= 1.0);
    CHECK(std::abs(got[k] - pixels[k]) <= delta.epsilon + 1e-15);
  }
}

TEST_CASE("perturbed_query rejects mismatched shapes") {
  TensorShape shape{2, 2, 1};
  std::vector<float> pixels(4, 0.5f);
  UniversalPerturbation delta;
  delta.shape = {2, 2, 3};  // channel mismatch
  delta.values.assign(12, 0.0);
  CHECK_THROWS_AS(perturbed_query(pixels, shape, delta), ShapeError);
}

TEST_CASE("tile_expand is linear in the tile values") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PerturbationTile a = make_tile(4, 2, 10.0), b = make_tile(4, 2, 10.0);
  for (auto& v : a.values) v = u(rng);
  for (auto& v : b.values) v = u(rng);
  PerturbationTile combo = make_tile(4, 2, 10.0);
  const double alpha = 0.7, beta = -1.3;
  for (std::size_t k = 0; k < combo.values.size(); ++k)
    combo.values[k] = alpha * a.values[k] + beta * b.values[k];

  const auto ea = tile_expand(a, 9, 11), eb = tile_expand(b, 9, 11),
             ec = tile_expand(combo, 9, 11);
  for (std::size_t k = 0; k < ec.values.size(); ++k)
    CHECK(ec.values[k] == doctest::Approx(alpha * ea.values[k] + beta * eb.values[k])
                              .epsilon(1e-12));
}

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uap {

// All tensors use row-major layout with the channel index fastest:
// flat index of (i, j, c) is (i * width + j) * channels + c.
struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  bool operator==(const TensorShape&) const = default;
};

inline std::size_t flat_index(const TensorShape& s, int i, int j, int c) {
  return (static_cast<std::size_t>(i) * s.width + j) * s.channels + c;
}

// One classifier input: pixel values in [0, 1], optional label (-1 unlabeled).
struct ImageTensor {
  TensorShape shape;
  std::vector<float> pixels;
  int label = -1;
};

// The attack's optimization variable: an l-by-l-by-C block whose entries are
// bounded by epsilon in l-infinity.
struct PerturbationTile {
  int side = 0;
  int channels = 0;
  double epsilon = 0.0;
  std::vector<double> values;

  std::size_t size() const {
    return static_cast<std::size_t>(side) * side * channels;
  }
};

PerturbationTile make_tile(int side, int channels, double epsilon);

// A full-resolution additive perturbation, applied identically to every image.
struct UniversalPerturbation {
  TensorShape shape;
  double epsilon = 0.0;
  std::vector<double> values;
};

// Expands a tile to height-by-width by modular repetition:
// out[i][j][c] = tile[i mod l][j mod l][c]. Final partial tiles are truncated.
UniversalPerturbation tile_expand(const PerturbationTile& tile, int height, int width);

// Clamps every coordinate into [-epsilon, epsilon]. Total and idempotent.
void project_linf_inplace(std::span<double> delta, double epsilon);
std::vector<double> project_linf(std::vector<double> delta, double epsilon);

// Clamps every coordinate into the valid pixel range [0, 1].
void clip_image_inplace(std::span<double> x);
std::vector<double> clip_image(std::vector<double> x);

double linf_norm(std::span<const double> v);

// Largest tile radius that guarantees clip(x + delta) stays inside the
// closed epsilon-ball of x in floating point. x + delta is rounded to the
// nearest double; for |x + delta| < 2 that rounding moves the sum by at most
// 2^-54, so confining tiles to epsilon - 2^-54 absorbs it. Without the
// margin, a coordinate projected to exactly +-epsilon can land one ulp
// outside the ball and be (correctly) rejected as a protocol violation.
double attack_safe_epsilon(double epsilon);

// clip(x + delta) as a fresh buffer; the perturbation shape must match the
// image shape exactly (channel mismatch is a shape error).
std::vector<double> perturbed_query(std::span<const float> pixels, const TensorShape& shape,
                                    const UniversalPerturbation& delta);

}  // namespace uap

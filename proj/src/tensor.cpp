#include "uap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uap/errors.hpp"

namespace uap {

PerturbationTile make_tile(int side, int channels, double epsilon) {
  if (side < 1 || channels < 1) {
    throw ShapeError("tile dimensions must be positive, got side=" + std::to_string(side) +
                     " channels=" + std::to_string(channels));
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  PerturbationTile t;
  t.side = side;
  t.channels = channels;
  t.epsilon = epsilon;
  t.values.assign(t.size(), 0.0);
  return t;
}

UniversalPerturbation tile_expand(const PerturbationTile& tile, int height, int width) {
  if (tile.side < 1 || tile.channels < 1) {
    throw ShapeError("tile_expand: tile has empty dimensions");
  }
  if (height < tile.side || width < tile.side) {
    throw ShapeError("tile_expand: output " + std::to_string(height) + "x" +
                     std::to_string(width) + " smaller than tile side " +
                     std::to_string(tile.side));
  }
  if (tile.values.size() != tile.size()) {
    throw ShapeError("tile_expand: tile buffer size does not match its dimensions");
  }
  UniversalPerturbation out;
  out.shape = {height, width, tile.channels};
  out.epsilon = tile.epsilon;
  out.values.resize(out.shape.size());
  const int l = tile.side;
  const int c_n = tile.channels;
  for (int i = 0; i < height; ++i) {
    const double* tile_row = tile.values.data() + static_cast<std::size_t>(i % l) * l * c_n;
    double* out_row = out.values.data() + static_cast<std::size_t>(i) * width * c_n;
    for (int j = 0; j < width; ++j) {
      const double* src = tile_row + static_cast<std::size_t>(j % l) * c_n;
      double* dst = out_row + static_cast<std::size_t>(j) * c_n;
      for (int c = 0; c < c_n; ++c) dst[c] = src[c];
    }
  }
  return out;
}

void project_linf_inplace(std::span<double> delta, double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw std::invalid_argument("project_linf: epsilon must be nonnegative");
  }
  for (double& v : delta) v = std::clamp(v, -epsilon, epsilon);
}

std::vector<double> project_linf(std::vector<double> delta, double epsilon) {
  project_linf_inplace(delta, epsilon);
  return delta;
}

void clip_image_inplace(std::span<double> x) {
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

std::vector<double> clip_image(std::vector<double> x) {
  clip_image_inplace(x);
  return x;
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double attack_safe_epsilon(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("attack_safe_epsilon: epsilon must be positive");
  }
  const double safe = epsilon - 0x1p-54;
  return safe > 0.0 ? safe : std::nextafter(epsilon, 0.0);
}

std::vector<double> perturbed_query(std::span<const float> pixels, const TensorShape& shape,
                                    const UniversalPerturbation& delta) {
  if (delta.shape != shape) {
    throw ShapeError("perturbed_query: perturbation shape " +
                     std::to_string(delta.shape.height) + "x" + std::to_string(delta.shape.width) +
                     "x" + std::to_string(delta.shape.channels) + " does not match image shape " +
                     std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
                     std::to_string(shape.channels));
  }
  if (pixels.size() != shape.size() || delta.values.size() != shape.size()) {
    throw ShapeError("perturbed_query: buffer size does not match shape");
  }
  std::vector<double> out(shape.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::clamp(static_cast<double>(pixels[k]) + delta.values[k], 0.0, 1.0);
  }
  return out;
}

}  // namespace uap

#include "uap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "uap/errors.hpp"

namespace uap {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

float finish_pixel(double v, bool quantize) {
  v = std::clamp(v, 0.0, 1.0);
  if (quantize) v = std::round(v * 255.0) / 255.0;
  return static_cast<float>(v);
}

}  // namespace

Dataset make_prototype_dataset(const PrototypeDataConfig& config) {
  if (config.count < 1) throw std::invalid_argument("prototype dataset: count must be >= 1");
  if (config.classes < 2) throw std::invalid_argument("prototype dataset: classes must be >= 2");
  if (config.period < 2 || config.period > std::min(config.shape.height, config.shape.width)) {
    throw std::invalid_argument("prototype dataset: period must lie in [2, min(H, W)]");
  }
  if (!(config.contrast > 0.0) || !(config.noise >= 0.0)) {
    throw std::invalid_argument("prototype dataset: need contrast > 0 and noise >= 0");
  }
  const TensorShape shape = config.shape;
  const std::size_t pixels = shape.size();
  const int period = config.period;

  // Per-class prototype fields: a few random waves with period dividing
  // `period` in both image axes, normalized to peak magnitude `contrast`.
  std::mt19937_64 proto_rng(splitmix(config.seed));
  std::uniform_int_distribution<int> freq(0, period - 1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  std::vector<std::vector<double>> prototypes(static_cast<std::size_t>(config.classes));
  for (auto& proto : prototypes) {
    proto.assign(pixels, 0.0);
    const int waves = 4;
    for (int m = 0; m < waves; ++m) {
      int p = 0;
      int q = 0;
      while (p == 0 && q == 0) {
        p = freq(proto_rng);
        q = freq(proto_rng);
      }
      const double a = amp(proto_rng);
      const double phi = phase(proto_rng);
      for (int i = 0; i < shape.height; ++i) {
        for (int j = 0; j < shape.width; ++j) {
          const double arg =
              2.0 * std::numbers::pi * (p * static_cast<double>(i) + q * j) / period + phi;
          for (int c = 0; c < shape.channels; ++c) {
            proto[flat_index(shape, i, j, c)] += a * std::cos(arg);
          }
        }
      }
    }
    double peak = 0.0;
    for (double v : proto) peak = std::max(peak, std::abs(v));
    for (double& v : proto) v = 0.5 + config.contrast * (v / peak);
  }

  Dataset d;
  d.shape = shape;
  d.count = config.count;
  d.pixels.resize(static_cast<std::size_t>(config.count) * pixels);
  d.labels.resize(static_cast<std::size_t>(config.count));
  for (int id = 0; id < config.count; ++id) {
    const int label = id % config.classes;
    d.labels[static_cast<std::size_t>(id)] = label;
    std::mt19937_64 rng(splitmix(config.seed ^ (0xABCD0000ULL + static_cast<std::uint64_t>(id))));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& proto = prototypes[static_cast<std::size_t>(label)];
    float* out = d.pixels.data() + static_cast<std::size_t>(id) * pixels;
    for (std::size_t k = 0; k < pixels; ++k) {
      out[k] = finish_pixel(proto[k] + config.noise * gauss(rng), config.quantize);
    }
  }
  return d;
}

Dataset make_two_gaussian_dataset(const TwoGaussianConfig& config) {
  if (config.count < 1) throw std::invalid_argument("two-gaussian dataset: count must be >= 1");
  if (!(config.amplitude > 0.0) || !(config.noise >= 0.0)) {
    throw std::invalid_argument("two-gaussian dataset: need amplitude > 0 and noise >= 0");
  }
  if (!(config.class1_fraction > 0.0 && config.class1_fraction < 1.0)) {
    throw std::invalid_argument("two-gaussian dataset: class1_fraction must lie in (0, 1)");
  }
  const TensorShape shape = config.shape;
  const std::size_t pixels = shape.size();

  std::mt19937_64 pattern_rng(splitmix(config.seed ^ 0x55AAULL));
  std::vector<double> u(pixels);
  for (double& v : u) v = pattern_rng() & 1 ? 1.0 : -1.0;

  Dataset d;
  d.shape = shape;
  d.count = config.count;
  d.pixels.resize(static_cast<std::size_t>(config.count) * pixels);
  d.labels.resize(static_cast<std::size_t>(config.count));
  for (int id = 0; id < config.count; ++id) {
    std::mt19937_64 rng(splitmix(config.seed ^ (0x1234'0000ULL + static_cast<std::uint64_t>(id))));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int label = unit(rng) < config.class1_fraction ? 1 : 0;
    const double sign = label == 1 ? 1.0 : -1.0;
    d.labels[static_cast<std::size_t>(id)] = label;
    float* out = d.pixels.data() + static_cast<std::size_t>(id) * pixels;
    for (std::size_t k = 0; k < pixels; ++k) {
      out[k] = finish_pixel(0.5 + sign * config.amplitude * u[k] + config.noise * gauss(rng),
                            false);
    }
  }
  return d;
}

}  // namespace uap

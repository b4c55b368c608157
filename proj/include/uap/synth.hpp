#pragma once

#include <cstdint>

#include "uap/dataset.hpp"

namespace uap {

// Deterministic synthetic image archive with tile-periodic class structure.
// Each class k gets a smooth prototype field built from cosine waves whose
// spatial period divides `period`, scaled to +/- contrast around 0.5; an
// image is its class prototype plus Gaussian pixel noise, clamped to [0,1]
// and (by default) quantized to the /255 grid so IDX round-trips exactly.
// Labels are assigned round-robin (id mod classes).
struct PrototypeDataConfig {
  TensorShape shape{28, 28, 1};
  int classes = 10;
  int count = 0;
  std::uint64_t seed = 7;
  double contrast = 0.20;
  double noise = 0.10;
  int period = 7;
  bool quantize = true;
};
Dataset make_prototype_dataset(const PrototypeDataConfig& config);

// Two-class Gaussian mixture: class y has mean 0.5 + (2y-1) * amplitude * u
// for a fixed +/-1 pixel pattern u, plus Gaussian noise, clamped to [0,1].
// Class 1 is drawn with probability class1_fraction per image.
struct TwoGaussianConfig {
  TensorShape shape{8, 8, 1};
  int count = 0;
  std::uint64_t seed = 11;
  double amplitude = 0.10;
  double noise = 0.08;
  double class1_fraction = 0.35;
};
Dataset make_two_gaussian_dataset(const TwoGaussianConfig& config);

}  // namespace uap

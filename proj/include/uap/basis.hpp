#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace uap {

enum class BasisKind { FftLowFrequency, Canonical, RandomNormal };

// Deterministic enumeration of unit search directions over an l-by-l-by-C
// tile (dimension n = l*l*C, canonical coordinate order).
//
// FftLowFrequency enumerates 2-d frequency pairs (u, v) in non-decreasing
// u^2 + v^2 (ties lexicographic by (u, v)), one representative per conjugate
// pair, emitting the cosine wave then the sine wave (the sine is identically
// zero at u = v = 0 and at Nyquist pairs and is omitted there). Waves are
// replicated across channels and normalized to unit l2 norm, giving l*l
// distinct spatial directions; index j selects entry j mod l*l.
class DirectionBasis {
 public:
  DirectionBasis(BasisKind kind, int side, int channels, std::uint64_t seed = 0);

  BasisKind kind() const { return kind_; }
  int side() const { return side_; }
  int channels() const { return channels_; }
  int dimension() const { return side_ * side_ * channels_; }
  std::uint64_t seed() const { return seed_; }

 private:
  friend Eigen::VectorXd basis_vector(const DirectionBasis&, int);
  BasisKind kind_;
  int side_;
  int channels_;
  std::uint64_t seed_;
  std::vector<Eigen::VectorXd> fft_directions_;  // populated for FftLowFrequency
};

// Unit direction j of the basis; throws std::out_of_range unless 0 <= j < n.
Eigen::VectorXd basis_vector(const DirectionBasis& basis, int j);

}  // namespace uap

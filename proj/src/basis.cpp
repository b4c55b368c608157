#include "uap/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "uap/errors.hpp"

namespace uap {

namespace {

// Tile coordinate order matches the tensor layout: (i * side + j) * C + c.
Eigen::VectorXd replicate_and_normalize(const std::vector<double>& spatial, int channels) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(spatial.size()) * channels);
  for (std::size_t p = 0; p < spatial.size(); ++p) {
    for (int c = 0; c < channels; ++c) {
      v[static_cast<Eigen::Index>(p) * channels + c] = spatial[p];
    }
  }
  const double norm = v.norm();
  if (norm <= 0.0) throw NumericalError("fft basis: zero-norm wave");
  return v / norm;
}

std::vector<Eigen::VectorXd> build_fft_directions(int side, int channels) {
  const int l = side;
  struct Freq {
    int u, v;
  };
  std::vector<Freq> order;
  order.reserve(static_cast<std::size_t>(l) * l);
  for (int u = 0; u < l; ++u) {
    for (int v = 0; v < l; ++v) order.push_back({u, v});
  }
  std::sort(order.begin(), order.end(), [](const Freq& a, const Freq& b) {
    const int ra = a.u * a.u + a.v * a.v;
    const int rb = b.u * b.u + b.v * b.v;
    if (ra != rb) return ra < rb;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(l) * l);
  std::set<std::pair<int, int>> emitted;
  std::vector<double> wave(static_cast<std::size_t>(l) * l);
  for (const auto& f : order) {
    // (u, v) and (l-u, l-v) index conjugate waves spanning the same cos/sin
    // pair; only the representative met first is emitted.
    const std::pair<int, int> conj{(l - f.u) % l, (l - f.v) % l};
    if (emitted.count(conj)) continue;
    emitted.insert({f.u, f.v});

    const bool self_conjugate = conj == std::pair<int, int>{f.u, f.v};
    for (int phase = 0; phase < (self_conjugate ? 1 : 2); ++phase) {
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          const double arg =
              2.0 * std::numbers::pi * (f.u * static_cast<double>(i) + f.v * j) / l;
          wave[static_cast<std::size_t>(i) * l + j] = phase == 0 ? std::cos(arg) : std::sin(arg);
        }
      }
      out.push_back(replicate_and_normalize(wave, channels));
    }
  }
  return out;
}

}  // namespace

DirectionBasis::DirectionBasis(BasisKind kind, int side, int channels, std::uint64_t seed)
    : kind_(kind), side_(side), channels_(channels), seed_(seed) {
  if (side < 1 || channels < 1) {
    throw ShapeError("direction basis: side and channels must be >= 1");
  }
  if (kind == BasisKind::FftLowFrequency) {
    fft_directions_ = build_fft_directions(side, channels);
  }
}

Eigen::VectorXd basis_vector(const DirectionBasis& basis, int j) {
  const int n = basis.dimension();
  if (j < 0 || j >= n) {
    throw std::out_of_range("basis_vector: index " + std::to_string(j) + " outside [0, " +
                            std::to_string(n) + ")");
  }
  switch (basis.kind()) {
    case BasisKind::Canonical: {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      v[j] = 1.0;
      return v;
    }
    case BasisKind::FftLowFrequency:
      return basis.fft_directions_[static_cast<std::size_t>(j) %
                                   basis.fft_directions_.size()];
    case BasisKind::RandomNormal: {
      // Per-index generator so direction j is identical no matter the call
      // order; splitmix finalizer decorrelates consecutive seeds.
      std::uint64_t h = basis.seed() + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(j) + 1);
      h ^= h >> 30;
      h *= 0xbf58476d1ce4e5b9ULL;
      h ^= h >> 27;
      h *= 0x94d049bb133111ebULL;
      h ^= h >> 31;
      std::mt19937_64 rng(h);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::VectorXd v(n);
      double norm_sq = 0.0;
      do {
        for (int k = 0; k < n; ++k) v[k] = gauss(rng);
        norm_sq = v.squaredNorm();
      } while (norm_sq <= 0.0);
      return v / std::sqrt(norm_sq);
    }
  }
  throw std::invalid_argument("basis_vector: unknown basis kind");
}

}  // namespace uap

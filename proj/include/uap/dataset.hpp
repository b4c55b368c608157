#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

// In-memory image archive: count images of a common shape, pixels in [0, 1],
// optional labels (empty vector = unlabeled).
struct Dataset {
  TensorShape shape;
  int count = 0;
  std::vector<float> pixels;  // count * shape.size(), image-major
  std::vector<int> labels;    // count entries or empty

  bool labeled() const { return !labels.empty(); }
  std::span<const float> image(int id) const;
  int label(int id) const;  // -1 when unlabeled
};

void validate_dataset(const Dataset& d);

// Seed-fixed disjoint split; holdout images are reserved for evaluation and
// must never be fed to an attack.
struct HoldoutSplit {
  std::vector<int> attack_ids;
  std::vector<int> holdout_ids;
};
HoldoutSplit split_holdout(int count, double holdout_fraction, std::uint64_t seed);

struct StreamItem {
  int id = -1;
  std::span<const float> pixels;
  int label = -1;
};

// Single-pass, without-replacement view over a subset of a Dataset. The
// visit order is a fixed permutation of the ids determined by the shuffle
// seed; each id is yielded at most once per stream lifetime.
class DatasetStream {
 public:
  DatasetStream(const Dataset& source, std::vector<int> ids, std::uint64_t shuffle_seed);

  // Next `count` fresh items; throws StreamExhausted if fewer remain.
  std::vector<StreamItem> draw(int count);
  std::size_t remaining() const { return order_.size() - cursor_; }
  std::size_t consumed() const { return cursor_; }
  const TensorShape& shape() const { return source_->shape; }
  const Dataset& source() const { return *source_; }

 private:
  const Dataset* source_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
};

}  // namespace uap

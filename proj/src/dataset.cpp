#include "uap/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "uap/errors.hpp"

namespace uap {

std::span<const float> Dataset::image(int id) const {
  const std::size_t n = shape.size();
  return {pixels.data() + static_cast<std::size_t>(id) * n, n};
}

int Dataset::label(int id) const {
  return labels.empty() ? -1 : labels[static_cast<std::size_t>(id)];
}

void validate_dataset(const Dataset& d) {
  if (d.shape.height < 1 || d.shape.width < 1 || d.shape.channels < 1) {
    throw ShapeError("dataset: image shape has empty dimensions");
  }
  if (d.count < 0 || d.pixels.size() != static_cast<std::size_t>(d.count) * d.shape.size()) {
    throw ShapeError("dataset: pixel buffer does not match count x shape");
  }
  if (!d.labels.empty() && d.labels.size() != static_cast<std::size_t>(d.count)) {
    throw ShapeError("dataset: label count " + std::to_string(d.labels.size()) +
                     " does not match image count " + std::to_string(d.count));
  }
}

HoldoutSplit split_holdout(int count, double holdout_fraction, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("split_holdout: empty dataset");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("split_holdout: fraction must lie in (0, 1)");
  }
  std::vector<int> ids(static_cast<std::size_t>(count));
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  auto holdout_count = static_cast<std::size_t>(count * holdout_fraction);
  holdout_count = std::clamp<std::size_t>(holdout_count, 1, static_cast<std::size_t>(count) - 1);
  HoldoutSplit split;
  split.holdout_ids.assign(ids.begin(), ids.begin() + holdout_count);
  split.attack_ids.assign(ids.begin() + holdout_count, ids.end());
  std::sort(split.holdout_ids.begin(), split.holdout_ids.end());
  std::sort(split.attack_ids.begin(), split.attack_ids.end());
  return split;
}

DatasetStream::DatasetStream(const Dataset& source, std::vector<int> ids,
                             std::uint64_t shuffle_seed)
    : source_(&source), order_(std::move(ids)) {
  validate_dataset(source);
  for (int id : order_) {
    if (id < 0 || id >= source.count) {
      throw std::out_of_range("dataset stream: id " + std::to_string(id) + " outside archive");
    }
  }
  std::mt19937_64 rng(shuffle_seed);
  std::shuffle(order_.begin(), order_.end(), rng);
}

std::vector<StreamItem> DatasetStream::draw(int count) {
  if (count < 1) throw std::invalid_argument("dataset stream: draw count must be >= 1");
  if (remaining() < static_cast<std::size_t>(count)) {
    throw StreamExhausted("dataset stream exhausted: requested " + std::to_string(count) +
                          " images, " + std::to_string(remaining()) + " remain");
  }
  std::vector<StreamItem> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int id = order_[cursor_++];
    out[static_cast<std::size_t>(k)] = {id, source_->image(id), source_->label(id)};
  }
  return out;
}

}  // namespace uap

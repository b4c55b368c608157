#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace uap {

// Tensor or layer dimensions that cannot be combined.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated binary files. byte_offset() is the position of the
// first byte that could not be interpreted.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::uint64_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// A query protocol violation: either the per-image budget q was exceeded or a
// query left the epsilon-ball of its base image. Carries the offending image.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& msg, std::int64_t image_id)
      : std::runtime_error(msg), image_id_(image_id) {}
  std::int64_t image_id() const { return image_id_; }

 private:
  std::int64_t image_id_;
};

// The dataset stream cannot supply the requested number of fresh images.
class StreamExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical degeneracy: covariance factorization failure, training divergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uap
